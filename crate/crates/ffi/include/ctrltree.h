/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef CTRLTREE_H
#define CTRLTREE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CtStatus {
  CT_STATUS_OK = 0,
  // A required pointer argument was NULL.
  CT_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  CT_STATUS_INVALID_UTF8 = 2,
  // Controller, metadata, tree or expression text could not be parsed.
  CT_STATUS_PARSE_ERROR = 3,
  // The configuration was rejected.
  CT_STATUS_INVALID_CONFIG = 4,
  // Tree construction failed.
  CT_STATUS_BUILD_FAILED = 5,
  // The state could not be evaluated by the tree.
  CT_STATUS_EVAL_FAILED = 6,
  // The tree could not be exported in the requested format.
  CT_STATUS_EXPORT_FAILED = 7,
  // The output buffer is too small; the required size was still written.
  CT_STATUS_BUFFER_TOO_SMALL = 8,
  // An internal panic was caught at the boundary.
  CT_STATUS_INTERNAL = 9,
} CtStatus;

// Export format for [`ct_tree_export`].
typedef enum CtFormat {
  CT_FORMAT_JSON = 0,
  CT_FORMAT_DOT = 1,
  CT_FORMAT_C = 2,
} CtFormat;

// Opaque controller handle.
typedef struct CtController CtController;

// Opaque tree handle.
typedef struct CtTree CtTree;

// Size statistics of a tree.
typedef struct CtTreeStats {
  size_t total_nodes;
  size_t inner_nodes;
  size_t leaves;
  size_t depth;
  size_t inexact_leaves;
} CtTreeStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ct_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next `ct_*` call on the same thread.
const char *ct_last_error_message(void);

// Error kind identifier (e.g. `ParseError`) of the last failed call, or NULL.
const char *ct_last_error_kind(void);

// Parses a controller CSV. `metadata_json` may be NULL.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum CtStatus ct_controller_from_csv(const char *csv,
                                     const char *metadata_json,
                                     struct CtController **out);

// Parses a strategy JSON document. `metadata_json` may be NULL.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum CtStatus ct_controller_from_strategy_json(const char *json,
                                               const char *metadata_json,
                                               struct CtController **out);

// Number of states in the controller; 0 for NULL.
//
// # Safety
// `controller` must be NULL or a live handle.
size_t ct_controller_num_states(const struct CtController *controller);

// Number of state variables; 0 for NULL.
//
// # Safety
// `controller` must be NULL or a live handle.
size_t ct_controller_num_variables(const struct CtController *controller);

// Releases a controller. NULL is ignored.
//
// # Safety
// `controller` must be NULL or a handle not freed before.
void ct_controller_free(struct CtController *controller);

// Learns a tree. `config_json` is a configuration document such as
// `{"impurity":"entropy","determinize":"none"}`; NULL means defaults.
//
// # Safety
// `controller` must be a live handle; `out` must be writable.
enum CtStatus ct_build_tree(const struct CtController *controller,
                            const char *config_json,
                            struct CtTree **out);

// Reads a tree from its JSON export.
//
// # Safety
// `json` must be NUL-terminated; `out` must be writable.
enum CtStatus ct_tree_from_json(const char *json, struct CtTree **out);

// Releases a tree. NULL is ignored.
//
// # Safety
// `tree` must be NULL or a handle not freed before.
void ct_tree_free(struct CtTree *tree);

// # Safety
// `tree` must be a live handle; `out` must be writable.
enum CtStatus ct_tree_stats(const struct CtTree *tree, struct CtTreeStats *out);

// Number of action labels of the tree; 0 for NULL.
//
// # Safety
// `tree` must be NULL or a live handle.
size_t ct_tree_num_actions(const struct CtTree *tree);

// Copies the label of action `id` into a new string.
//
// # Safety
// `tree` must be a live handle; `out` must be writable.
enum CtStatus ct_tree_action_label(const struct CtTree *tree, uint32_t id, char **out);

// Evaluates the tree on `state[0..len]` and writes the allowed action ids
// into `actions_out[0..capacity]`. `*count_out` receives the number of
// allowed actions even when it exceeds `capacity`, in which case
// `BufferTooSmall` is returned.
//
// # Safety
// `state` must point to `len` doubles, `actions_out` to `capacity`
// writable slots (may be NULL when `capacity` is 0).
enum CtStatus ct_tree_evaluate(const struct CtTree *tree,
                               const double *state,
                               size_t len,
                               uint32_t *actions_out,
                               size_t capacity,
                               size_t *count_out);

// Serializes the tree; `*out` receives a new string.
//
// # Safety
// `tree` must be a live handle; `out` must be writable.
enum CtStatus ct_tree_export(const struct CtTree *tree, enum CtFormat format, char **out);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a string from a `ct_*` out-parameter not freed before.
void ct_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTRLTREE_H */
