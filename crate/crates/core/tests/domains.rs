use mccr::domains::{make_game, GenericPoker, Iigs, LiarsDice};
use mccr::tree::{count_tree, GameTree};
use mccr::with_game;

#[test]
fn decision_history_counts() {
    assert_eq!(count_tree(&Iigs::new(5).unwrap()).decisions, 41331);
    assert_eq!(count_tree(&LiarsDice::new(1, 1, 6).unwrap()).decisions, 147456);
    assert_eq!(count_tree(&GenericPoker::new(3, 3, 2, 2).unwrap()).decisions, 23760);
}

#[test]
fn desk_domains_validate() {
    for spec in ["IIGS(5)", "LD(1,1,6)", "GP(3,3,2,2)"] {
        let g = make_game(spec).unwrap();
        with_game!(&g, g => {
            let tree = GameTree::build(g);
            tree.validate().unwrap_or_else(|e| panic!("{spec}: {e}"));
        });
    }
}
