use std::path::Path;
use std::process::Command;

const HEADER: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/include/mccr.h");

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(HEADER).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(h.contains(&format!(" {name}(")) || h.contains(&format!("*{name}(")), "`{name}` missing");
    }
    for ty in ["typedef struct MccrGame MccrGame;", "typedef struct MccrAgent MccrAgent;", "MCCR_STATUS_PANIC = 10"] {
        assert!(h.contains(ty), "`{ty}` missing");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    let src = dir.join("mccr_header_check.c");
    std::fs::write(&src, "#include \"mccr.h\"\nint main(void) { MccrGame *g = 0; return (int)mccr_game_num_nodes(g); }\n").unwrap();
    let include = Path::new(HEADER).parent().unwrap();
    for (compiler, extra) in [("cc", &["-std=c99"][..]), ("c++", &["-x", "c++"][..])] {
        let out = Command::new(compiler)
            .args(extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(include)
            .arg(&src)
            .output()
            .unwrap_or_else(|e| panic!("cannot run `{compiler}`: {e}"));
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
