//! C interface to the `mccr` games, solvers and agents.
//!
//! Objects cross the boundary as opaque pointers. Each `*_new` function has a
//! matching `*_free`; freeing NULL is a no-op. Fallible calls return an
//! [`MccrStatus`] and leave their out-parameters untouched on failure, except
//! for the size reported by string getters. The
//! message of the most recent failure on the calling thread is available from
//! [`mccr_last_error`].
//!
//! Strings are copied into caller buffers as NUL-terminated UTF-8. When the
//! buffer is too small the call fails with `MCCR_STATUS_BUFFER_TOO_SMALL` and
//! reports the required size, NUL included, through `out_len`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use mccr::agent::{Agent, AgentSpec, GameContext};
use mccr::domains::make_game;
use mccr::eval::exploitability;
use mccr::harness::{make_agent, play_match};
use mccr::solver::{Budget, Cfr, OsConfig, OsSolver};
use mccr::{with_game, Error, Game, NodeKind, Player};

/// Result of every fallible call. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MccrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownGame = 3,
    OutOfRange = 4,
    Config = 5,
    Desync = 6,
    IllegalAction = 7,
    BufferTooSmall = 8,
    Runtime = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MccrAlgorithm {
    /// Outcome-sampling MCCFR with exploration 0.6.
    OutcomeSampling = 0,
    /// Vanilla CFR over the full tree.
    Cfr = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MccrNodeKind {
    Chance = 0,
    Player1 = 1,
    Player2 = 2,
    Terminal = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MccrStateInfo {
    pub kind: MccrNodeKind,
    /// Zero at terminals.
    pub num_actions: usize,
    /// Player-one utility; zero unless terminal.
    pub utility: f64,
}

/// A game together with its expanded tree.
pub struct MccrGame {
    inner: Arc<dyn DynGame>,
}

/// A history of a game, stored as the actions from the root.
pub struct MccrState {
    game: Arc<dyn DynGame>,
    actions: Vec<usize>,
}

/// An online player bound to one game and seat.
pub struct MccrAgent {
    game: Arc<dyn DynGame>,
    inner: Box<dyn Agent>,
}

struct Failure(MccrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownGame(_) => MccrStatus::UnknownGame,
            Error::ParameterOutOfRange(_) => MccrStatus::OutOfRange,
            Error::Config(_) | Error::Parse(_) => MccrStatus::Config,
            Error::Desync(_) => MccrStatus::Desync,
            _ => MccrStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Runs `f`, records any failure or panic, and maps it to a status.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> MccrStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MccrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            MccrStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MccrStatus::NullPointer, format!("`{what}` is NULL"))
}

/// # Safety
/// `p` is NULL or valid for reads of `T` for the returned lifetime.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` is NULL or valid for reads and writes of `T` for the returned lifetime.
unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

/// # Safety
/// `s` is NULL or a NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> FfiResult<&'a str> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(MccrStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

/// # Safety
/// `buf` is NULL or valid for `len` bytes; `out_len` is NULL or writable.
unsafe fn write_str(s: &str, buf: *mut c_char, len: usize, out_len: *mut usize) -> FfiResult<()> {
    let need = s.len() + 1;
    if !out_len.is_null() {
        *out_len = need;
    }
    if buf.is_null() || len < need {
        return Err(Failure(
            MccrStatus::BufferTooSmall,
            format!("need a buffer of {need} bytes, got {len}"),
        ));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

fn seat(p: u8) -> FfiResult<Player> {
    match p {
        1 => Ok(Player::One),
        2 => Ok(Player::Two),
        _ => Err(Failure(MccrStatus::OutOfRange, format!("player must be 1 or 2, got {p}"))),
    }
}

/// Object-safe view of a [`GameContext`].
trait DynGame: Send + Sync {
    fn name(&self) -> String;
    fn num_nodes(&self) -> usize;
    fn solve(&self, algo: MccrAlgorithm, iters: u64, seed: u64) -> f64;
    fn agent(&self, spec: &AgentSpec, seat: Player, seed: u64, preplay: Budget) -> FfiResult<Box<dyn Agent>>;
    fn play(&self, agents: &mut [Box<dyn Agent>; 2], move_budget: Budget, seed: u64) -> FfiResult<f64>;
    fn info(&self, actions: &[usize]) -> MccrStateInfo;
    fn infoset_key(&self, actions: &[usize], player: Player) -> String;
    fn public_key(&self, actions: &[usize]) -> String;
}

struct Ctx<G: Game>(Arc<GameContext<G>>);

impl<G: Game + Clone + 'static> DynGame for Ctx<G> {
    fn name(&self) -> String {
        self.0.game.name()
    }

    fn num_nodes(&self) -> usize {
        self.0.tree.len()
    }

    fn solve(&self, algo: MccrAlgorithm, iters: u64, seed: u64) -> f64 {
        let profile = match algo {
            MccrAlgorithm::OutcomeSampling => {
                let mut os = OsSolver::new(self.0.game.clone(), OsConfig::default(), seed);
                os.run(Budget::Iterations(iters));
                os.tables().average_profile()
            }
            MccrAlgorithm::Cfr => {
                let mut cfr = Cfr::new(&self.0.tree);
                cfr.iterate(iters);
                cfr.average_profile()
            }
        };
        exploitability(&self.0.tree, &profile)
    }

    fn agent(&self, spec: &AgentSpec, seat: Player, seed: u64, preplay: Budget) -> FfiResult<Box<dyn Agent>> {
        Ok(make_agent(spec, &self.0, seat, seed, preplay)?)
    }

    fn play(&self, agents: &mut [Box<dyn Agent>; 2], move_budget: Budget, seed: u64) -> FfiResult<f64> {
        Ok(play_match(&self.0, agents, move_budget, seed)?.1)
    }

    fn info(&self, actions: &[usize]) -> MccrStateInfo {
        let s = self.0.game.replay(actions);
        let kind = match self.0.game.node_kind(&s) {
            NodeKind::Chance => MccrNodeKind::Chance,
            NodeKind::Decision(Player::One) => MccrNodeKind::Player1,
            NodeKind::Decision(Player::Two) => MccrNodeKind::Player2,
            NodeKind::Terminal => MccrNodeKind::Terminal,
        };
        let terminal = kind == MccrNodeKind::Terminal;
        MccrStateInfo {
            kind,
            num_actions: if terminal { 0 } else { self.0.game.num_actions(&s) },
            utility: if terminal { self.0.game.utility(&s) } else { 0.0 },
        }
    }

    fn infoset_key(&self, actions: &[usize], player: Player) -> String {
        self.0.game.infoset_key(&self.0.game.replay(actions), player)
    }

    fn public_key(&self, actions: &[usize]) -> String {
        self.0.game.public_key(&self.0.game.replay(actions))
    }
}

fn build_game(spec: &str) -> FfiResult<Arc<dyn DynGame>> {
    let game = make_game(spec)?;
    Ok(with_game!(game, g => {
        let ctx: Arc<dyn DynGame> = Arc::new(Ctx(GameContext::new(g)?));
        ctx
    }))
}

/// Static description of a status code. Never NULL.
#[no_mangle]
pub extern "C" fn mccr_status_str(status: MccrStatus) -> *const c_char {
    let s: &'static CStr = match status {
        MccrStatus::Ok => c"ok",
        MccrStatus::NullPointer => c"null pointer",
        MccrStatus::InvalidUtf8 => c"invalid UTF-8",
        MccrStatus::UnknownGame => c"unknown game",
        MccrStatus::OutOfRange => c"parameter out of range",
        MccrStatus::Config => c"invalid configuration",
        MccrStatus::Desync => c"agent out of sync",
        MccrStatus::IllegalAction => c"illegal action",
        MccrStatus::BufferTooSmall => c"buffer too small",
        MccrStatus::Runtime => c"runtime error",
        MccrStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Copies the last failure message of this thread into `buf`.
///
/// Returns the size the message needs, NUL included. Writes nothing when
/// `buf` is NULL or shorter than that.
///
/// # Safety
/// `buf` is NULL or valid for writes of `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mccr_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let mut need = 0;
        let _ = write_str(&msg, buf, len, &mut need);
        need
    })
}

/// Builds a game from a spec such as `LD(1,1,6)` and expands its tree.
///
/// # Safety
/// `spec` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mccr_game_new(spec: *const c_char, out: *mut *mut MccrGame) -> MccrStatus {
    guard(|| {
        let spec = read_str(spec, "spec")?;
        let out = deref_mut(out, "out")?;
        let inner = build_game(spec)?;
        *out = Box::into_raw(Box::new(MccrGame { inner }));
        Ok(())
    })
}

/// # Safety
/// `game` is NULL or was returned by [`mccr_game_new`] and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mccr_game_free(game: *mut MccrGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Canonical spec string of `game`.
///
/// # Safety
/// `game` is a live handle; `buf` is NULL or valid for `len` bytes;
/// `out_len` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn mccr_game_name(
    game: *const MccrGame,
    buf: *mut c_char,
    len: usize,
    out_len: *mut usize,
) -> MccrStatus {
    guard(|| write_str(&deref(game, "game")?.inner.name(), buf, len, out_len))
}

/// Number of histories in the expanded tree, or 0 for NULL.
///
/// # Safety
/// `game` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mccr_game_num_nodes(game: *const MccrGame) -> usize {
    game.as_ref().map_or(0, |g| g.inner.num_nodes())
}

/// Solves from the root for `iters` iterations and reports the
/// exploitability of the average strategy.
///
/// # Safety
/// `game` is a live handle; `out_exploitability` is writable.
#[no_mangle]
pub unsafe extern "C" fn mccr_game_solve(
    game: *const MccrGame,
    algo: MccrAlgorithm,
    iters: u64,
    seed: u64,
    out_exploitability: *mut f64,
) -> MccrStatus {
    guard(|| {
        let game = deref(game, "game")?;
        let out = deref_mut(out_exploitability, "out_exploitability")?;
        *out = game.inner.solve(algo, iters, seed);
        Ok(())
    })
}

/// Creates the root history of `game`. The state keeps the game alive.
///
/// # Safety
/// `game` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mccr_state_new(game: *const MccrGame, out: *mut *mut MccrState) -> MccrStatus {
    guard(|| {
        let game = deref(game, "game")?;
        let out = deref_mut(out, "out")?;
        *out = Box::into_raw(Box::new(MccrState {
            game: game.inner.clone(),
            actions: Vec::new(),
        }));
        Ok(())
    })
}

/// # Safety
/// `state` is NULL or was returned by [`mccr_state_new`] and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mccr_state_free(state: *mut MccrState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// # Safety
/// `state` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mccr_state_info(state: *const MccrState, out: *mut MccrStateInfo) -> MccrStatus {
    guard(|| {
        let state = deref(state, "state")?;
        *deref_mut(out, "out")? = state.game.info(&state.actions);
        Ok(())
    })
}

/// Advances `state` by `action`, which must be below the action count.
///
/// # Safety
/// `state` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn mccr_state_apply(state: *mut MccrState, action: usize) -> MccrStatus {
    guard(|| {
        let state = deref_mut(state, "state")?;
        let info = state.game.info(&state.actions);
        if action >= info.num_actions {
            return Err(Failure(
                MccrStatus::IllegalAction,
                format!("action {action} is not legal; the state has {} actions", info.num_actions),
            ));
        }
        state.actions.push(action);
        Ok(())
    })
}

/// Information-set key of `player` (1 or 2) at `state`.
///
/// # Safety
/// `state` is a live handle; `buf` is NULL or valid for `len` bytes;
/// `out_len` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn mccr_state_infoset_key(
    state: *const MccrState,
    player: u8,
    buf: *mut c_char,
    len: usize,
    out_len: *mut usize,
) -> MccrStatus {
    guard(|| {
        let state = deref(state, "state")?;
        let key = state.game.infoset_key(&state.actions, seat(player)?);
        write_str(&key, buf, len, out_len)
    })
}

/// Creates an agent from a spec such as `mccr:keep:eps=0.6`, running
/// `preplay_iters` iterations of preplay.
///
/// # Safety
/// `game` is a live handle; `spec` is a NUL-terminated string; `out` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mccr_agent_new(
    game: *const MccrGame,
    spec: *const c_char,
    player: u8,
    seed: u64,
    preplay_iters: u64,
    out: *mut *mut MccrAgent,
) -> MccrStatus {
    guard(|| {
        let game = deref(game, "game")?;
        let spec: AgentSpec = read_str(spec, "spec")?.parse()?;
        let out = deref_mut(out, "out")?;
        let inner = game.inner.agent(&spec, seat(player)?, seed, Budget::Iterations(preplay_iters))?;
        *out = Box::into_raw(Box::new(MccrAgent {
            game: game.inner.clone(),
            inner,
        }));
        Ok(())
    })
}

/// # Safety
/// `agent` is NULL or was returned by [`mccr_agent_new`] and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mccr_agent_free(agent: *mut MccrAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}

fn same_game(agent: &MccrAgent, state: &MccrState) -> FfiResult<()> {
    if Arc::ptr_eq(&agent.game, &state.game) {
        Ok(())
    } else {
        Err(Failure(MccrStatus::Config, "agent and state belong to different games".into()))
    }
}

/// Tells `agent` about the move that led to `state`.
///
/// # Safety
/// `agent` and `state` are live handles of the same game.
#[no_mangle]
pub unsafe extern "C" fn mccr_agent_observe(agent: *mut MccrAgent, state: *const MccrState) -> MccrStatus {
    guard(|| {
        let agent = deref_mut(agent, "agent")?;
        let state = deref(state, "state")?;
        same_game(agent, state)?;
        let own = state.game.infoset_key(&state.actions, agent.inner.seat());
        Ok(agent.inner.observe(&state.game.public_key(&state.actions), &own)?)
    })
}

/// Chooses an action at `state`, where the agent's seat must be acting.
///
/// # Safety
/// `agent` and `state` are live handles of the same game; `out_action` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mccr_agent_act(
    agent: *mut MccrAgent,
    state: *const MccrState,
    move_iters: u64,
    out_action: *mut usize,
) -> MccrStatus {
    guard(|| {
        let agent = deref_mut(agent, "agent")?;
        let state = deref(state, "state")?;
        let out = deref_mut(out_action, "out_action")?;
        same_game(agent, state)?;
        let seat = agent.inner.seat();
        let acting = match state.game.info(&state.actions).kind {
            MccrNodeKind::Player1 => Some(Player::One),
            MccrNodeKind::Player2 => Some(Player::Two),
            _ => None,
        };
        if acting != Some(seat) {
            return Err(Failure(MccrStatus::Desync, format!("player {seat} is not to act")));
        }
        let key = state.game.infoset_key(&state.actions, seat);
        *out = agent.inner.act(&key, Budget::Iterations(move_iters))?;
        Ok(())
    })
}

/// Plays one match between copies of `first` (seat 1) and `second`
/// (seat 2) and reports player one's utility. The handles are unchanged.
///
/// # Safety
/// `game`, `first` and `second` are live handles of the same game;
/// `out_utility` is writable.
#[no_mangle]
pub unsafe extern "C" fn mccr_play_match(
    game: *const MccrGame,
    first: *const MccrAgent,
    second: *const MccrAgent,
    move_iters: u64,
    seed: u64,
    out_utility: *mut f64,
) -> MccrStatus {
    guard(|| {
        let game = deref(game, "game")?;
        let (a, b) = (deref(first, "first")?, deref(second, "second")?);
        let out = deref_mut(out_utility, "out_utility")?;
        if !Arc::ptr_eq(&a.game, &game.inner) || !Arc::ptr_eq(&b.game, &game.inner) {
            return Err(Failure(MccrStatus::Config, "agents belong to a different game".into()));
        }
        if a.inner.seat() != Player::One || b.inner.seat() != Player::Two {
            return Err(Failure(MccrStatus::Config, "`first` must sit in seat 1 and `second` in seat 2".into()));
        }
        let mut agents = [a.inner.clone(), b.inner.clone()];
        *out = game.inner.play(&mut agents, Budget::Iterations(move_iters), seed)?;
        Ok(())
    })
}
