#ifndef MCCR_H
#define MCCR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  /**
   * Outcome-sampling MCCFR with exploration 0.6.
   */
  MCCR_ALGORITHM_OUTCOME_SAMPLING = 0,
  /**
   * Vanilla CFR over the full tree.
   */
  MCCR_ALGORITHM_CFR = 1,
} MccrAlgorithm;

typedef enum {
  MCCR_NODE_KIND_CHANCE = 0,
  MCCR_NODE_KIND_PLAYER1 = 1,
  MCCR_NODE_KIND_PLAYER2 = 2,
  MCCR_NODE_KIND_TERMINAL = 3,
} MccrNodeKind;

/**
 * Result of every fallible call. Zero is success.
 */
typedef enum {
  MCCR_STATUS_OK = 0,
  MCCR_STATUS_NULL_POINTER = 1,
  MCCR_STATUS_INVALID_UTF8 = 2,
  MCCR_STATUS_UNKNOWN_GAME = 3,
  MCCR_STATUS_OUT_OF_RANGE = 4,
  MCCR_STATUS_CONFIG = 5,
  MCCR_STATUS_DESYNC = 6,
  MCCR_STATUS_ILLEGAL_ACTION = 7,
  MCCR_STATUS_BUFFER_TOO_SMALL = 8,
  MCCR_STATUS_RUNTIME = 9,
  MCCR_STATUS_PANIC = 10,
} MccrStatus;

/**
 * An online player bound to one game and seat.
 */
typedef struct MccrAgent MccrAgent;

/**
 * A game together with its expanded tree.
 */
typedef struct MccrGame MccrGame;

/**
 * A history of a game, stored as the actions from the root.
 */
typedef struct MccrState MccrState;

typedef struct {
  MccrNodeKind kind;
  /**
   * Zero at terminals.
   */
  size_t num_actions;
  /**
   * Player-one utility; zero unless terminal.
   */
  double utility;
} MccrStateInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code. Never NULL.
 */
const char *mccr_status_str(MccrStatus status);

/**
 * Copies the last failure message of this thread into `buf`.
 *
 * Returns the size the message needs, NUL included. Writes nothing when
 * `buf` is NULL or shorter than that.
 *
 * # Safety
 * `buf` is NULL or valid for writes of `len` bytes.
 */
size_t mccr_last_error(char *buf, size_t len);

/**
 * Builds a game from a spec such as `LD(1,1,6)` and expands its tree.
 *
 * # Safety
 * `spec` is a NUL-terminated string; `out` is writable.
 */
MccrStatus mccr_game_new(const char *spec, MccrGame **out);

/**
 * # Safety
 * `game` is NULL or was returned by [`mccr_game_new`] and not yet freed.
 */
void mccr_game_free(MccrGame *game);

/**
 * Canonical spec string of `game`.
 *
 * # Safety
 * `game` is a live handle; `buf` is NULL or valid for `len` bytes;
 * `out_len` is NULL or writable.
 */
MccrStatus mccr_game_name(const MccrGame *game, char *buf, size_t len, size_t *out_len);

/**
 * Number of histories in the expanded tree, or 0 for NULL.
 *
 * # Safety
 * `game` is NULL or a live handle.
 */
size_t mccr_game_num_nodes(const MccrGame *game);

/**
 * Solves from the root for `iters` iterations and reports the
 * exploitability of the average strategy.
 *
 * # Safety
 * `game` is a live handle; `out_exploitability` is writable.
 */
MccrStatus mccr_game_solve(const MccrGame *game,
                           MccrAlgorithm algo,
                           uint64_t iters,
                           uint64_t seed,
                           double *out_exploitability);

/**
 * Creates the root history of `game`. The state keeps the game alive.
 *
 * # Safety
 * `game` is a live handle; `out` is writable.
 */
MccrStatus mccr_state_new(const MccrGame *game, MccrState **out);

/**
 * # Safety
 * `state` is NULL or was returned by [`mccr_state_new`] and not yet freed.
 */
void mccr_state_free(MccrState *state);

/**
 * # Safety
 * `state` is a live handle; `out` is writable.
 */
MccrStatus mccr_state_info(const MccrState *state, MccrStateInfo *out);

/**
 * Advances `state` by `action`, which must be below the action count.
 *
 * # Safety
 * `state` is a live handle.
 */
MccrStatus mccr_state_apply(MccrState *state, size_t action);

/**
 * Information-set key of `player` (1 or 2) at `state`.
 *
 * # Safety
 * `state` is a live handle; `buf` is NULL or valid for `len` bytes;
 * `out_len` is NULL or writable.
 */
MccrStatus mccr_state_infoset_key(const MccrState *state,
                                  uint8_t player,
                                  char *buf,
                                  size_t len,
                                  size_t *out_len);

/**
 * Creates an agent from a spec such as `mccr:keep:eps=0.6`, running
 * `preplay_iters` iterations of preplay.
 *
 * # Safety
 * `game` is a live handle; `spec` is a NUL-terminated string; `out` is
 * writable.
 */
MccrStatus mccr_agent_new(const MccrGame *game,
                          const char *spec,
                          uint8_t player,
                          uint64_t seed,
                          uint64_t preplay_iters,
                          MccrAgent **out);

/**
 * # Safety
 * `agent` is NULL or was returned by [`mccr_agent_new`] and not yet freed.
 */
void mccr_agent_free(MccrAgent *agent);

/**
 * Tells `agent` about the move that led to `state`.
 *
 * # Safety
 * `agent` and `state` are live handles of the same game.
 */
MccrStatus mccr_agent_observe(MccrAgent *agent, const MccrState *state);

/**
 * Chooses an action at `state`, where the agent's seat must be acting.
 *
 * # Safety
 * `agent` and `state` are live handles of the same game; `out_action` is
 * writable.
 */
MccrStatus mccr_agent_act(MccrAgent *agent,
                          const MccrState *state,
                          uint64_t move_iters,
                          size_t *out_action);

/**
 * Plays one match between copies of `first` (seat 1) and `second`
 * (seat 2) and reports player one's utility. The handles are unchanged.
 *
 * # Safety
 * `game`, `first` and `second` are live handles of the same game;
 * `out_utility` is writable.
 */
MccrStatus mccr_play_match(const MccrGame *game,
                           const MccrAgent *first,
                           const MccrAgent *second,
                           uint64_t move_iters,
                           uint64_t seed,
                           double *out_utility);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCCR_H */
