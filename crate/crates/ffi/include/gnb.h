#ifndef GNB_H
#define GNB_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2 to 5 match the CLI exit codes.
 */
typedef enum {
  GNB_STATUS_OK = 0,
  GNB_STATUS_OTHER = 1,
  GNB_STATUS_PARAM = 2,
  GNB_STATUS_FORMAT = 3,
  GNB_STATUS_DIVERGENCE = 4,
  GNB_STATUS_IO = 5,
  GNB_STATUS_NULL_POINTER = 6,
  GNB_STATUS_BUFFER_TOO_SMALL = 7,
  GNB_STATUS_PANIC = 8,
} GnbStatus;

/**
 * Opaque dataset handle.
 */
typedef struct GnbDataset GnbDataset;

/**
 * Opaque graph handle.
 */
typedef struct GnbGraph GnbGraph;

/**
 * Message for the most recent failure on this thread, or NULL. Valid until
 * the next call into the library from the same thread.
 */
const char *gnb_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gnb_version(void);

/**
 * Samples a Watts-Strogatz graph.
 *
 * # Safety
 * `out` must be a valid pointer to a writable handle slot.
 */
GnbStatus gnb_ws_generate(size_t n, size_t k, double beta, uint64_t seed, GnbGraph **out);

/**
 * Builds a graph from `m` undirected edges `(src[i], dst[i])`.
 *
 * # Safety
 * `src` and `dst` must point to `m` readable values each (or be NULL when
 * `m` is 0); `out` must be writable.
 */
GnbStatus gnb_graph_from_edges(size_t n,
                               const size_t *src,
                               const size_t *dst,
                               size_t m,
                               GnbGraph **out);

/**
 * # Safety
 * `g` must be NULL or a live handle.
 */
size_t gnb_graph_num_nodes(const GnbGraph *g);

/**
 * # Safety
 * `g` must be NULL or a live handle.
 */
size_t gnb_graph_num_edges(const GnbGraph *g);

/**
 * Copies the sorted edge list (`src < dst`) into caller buffers of
 * capacity `cap`.
 *
 * # Safety
 * `g` must be a live handle; `src` and `dst` must hold `cap` writable values.
 */
GnbStatus gnb_graph_edges(const GnbGraph *g, size_t *src, size_t *dst, size_t cap);

/**
 * BFS hop distances from `root` into `dist` (length `num_nodes`); -1 marks
 * unreachable nodes.
 *
 * # Safety
 * `g` must be a live handle; `dist` must hold `len` writable values.
 */
GnbStatus gnb_bfs_distances(const GnbGraph *g, size_t root, int64_t *dist, size_t len);

/**
 * # Safety
 * `g` must be NULL or a handle not yet freed.
 */
void gnb_graph_free(GnbGraph *g);

/**
 * The WS1000 dataset with i.i.d. Gaussian features.
 *
 * # Safety
 * `out` must be writable.
 */
GnbStatus gnb_dataset_ws1000(uint64_t graph_seed, uint64_t feature_seed, GnbDataset **out);

/**
 * WS1000 with parental-dependence features of strength `gamma`.
 *
 * # Safety
 * `out` must be writable.
 */
GnbStatus gnb_dataset_ws1000_gamma(uint64_t graph_seed,
                                   uint64_t feature_seed,
                                   uint64_t root_seed,
                                   double gamma,
                                   GnbDataset **out);

/**
 * # Safety
 * `dir` must be a NUL-terminated path; `out` must be writable.
 */
GnbStatus gnb_dataset_load(const char *dir, GnbDataset **out);

/**
 * # Safety
 * `ds` must be a live handle and `dir` a NUL-terminated path.
 */
GnbStatus gnb_dataset_save(const GnbDataset *ds, const char *dir);

/**
 * # Safety
 * `ds` must be NULL or a live handle.
 */
size_t gnb_dataset_num_nodes(const GnbDataset *ds);

/**
 * # Safety
 * `ds` must be NULL or a live handle.
 */
size_t gnb_dataset_feature_dim(const GnbDataset *ds);

/**
 * Copies the row-major feature matrix into `buf` of capacity `cap`.
 *
 * # Safety
 * `ds` must be a live handle; `buf` must hold `cap` writable values.
 */
GnbStatus gnb_dataset_features(const GnbDataset *ds, double *buf, size_t cap);

/**
 * A new graph handle holding a copy of the dataset's graph.
 *
 * # Safety
 * `ds` must be a live handle; `out` must be writable.
 */
GnbStatus gnb_dataset_graph(const GnbDataset *ds, GnbGraph **out);

/**
 * # Safety
 * `ds` must be NULL or a handle not yet freed.
 */
void gnb_dataset_free(GnbDataset *ds);

/**
 * ROC AUC of `scores` against 0/1 `labels` (any nonzero byte is positive).
 *
 * # Safety
 * `scores` and `labels` must point to `n` readable values; `out` must be
 * writable.
 */
GnbStatus gnb_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

#endif  /* GNB_H */
