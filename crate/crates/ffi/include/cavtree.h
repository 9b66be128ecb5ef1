#ifndef CAVTREE_H
#define CAVTREE_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes for fallible calls that do not return a handle.
 */
typedef enum CavtreeStatus {
  CavtreeStatus_Ok = 0,
  CavtreeStatus_NullArgument = 1,
  CavtreeStatus_InvalidUtf8 = 2,
  CavtreeStatus_MissingInput = 3,
  CavtreeStatus_ValidationFailed = 4,
  CavtreeStatus_RuntimeError = 5,
} CavtreeStatus;

typedef struct CavtreeCatalog CavtreeCatalog;

typedef struct CavtreeCavs CavtreeCavs;

typedef struct CavtreeSimilarity CavtreeSimilarity;

typedef struct CavtreeStore CavtreeStore;

typedef struct CavtreeTree CavtreeTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *cavtree_last_error(void);

/**
 * Release a string returned by this library.
 */
void cavtree_string_free(char *s);

/**
 * Load an embeddings CSV (header `id,v0,...`); null on failure.
 */
struct CavtreeStore *cavtree_store_load(const char *path);

void cavtree_store_free(struct CavtreeStore *store);

/**
 * Embedding dimension, or 0 for a null handle.
 */
uintptr_t cavtree_store_dim(const struct CavtreeStore *store);

uintptr_t cavtree_store_len(const struct CavtreeStore *store);

/**
 * Load a concepts JSONL file against a store; example ids that do not
 * resolve are dropped, concepts left with fewer than `min_examples` ids are
 * rejected.
 */
struct CavtreeCatalog *cavtree_catalog_load(const char *path,
                                            const struct CavtreeStore *store,
                                            uintptr_t min_examples);

void cavtree_catalog_free(struct CavtreeCatalog *catalog);

uintptr_t cavtree_catalog_len(const struct CavtreeCatalog *catalog);

/**
 * Split and train every concept. `config_json` takes the same JSON document
 * as the CLI config file (null or empty for defaults).
 */
struct CavtreeCavs *cavtree_learn(const struct CavtreeStore *store,
                                  const struct CavtreeCatalog *catalog,
                                  const char *config_json);

void cavtree_cavs_free(struct CavtreeCavs *cavs);

uintptr_t cavtree_cavs_count(const struct CavtreeCavs *cavs);

uintptr_t cavtree_cavs_kept_count(const struct CavtreeCavs *cavs);

/**
 * Serialize the trained set as the cavs.json document body.
 */
char *cavtree_cavs_to_json(const struct CavtreeCavs *cavs);

/**
 * Similarity matrix over the kept concepts.
 */
struct CavtreeSimilarity *cavtree_similarity(const struct CavtreeCavs *cavs,
                                             const struct CavtreeCatalog *catalog,
                                             const struct CavtreeStore *store);

void cavtree_similarity_free(struct CavtreeSimilarity *sim);

uintptr_t cavtree_similarity_k(const struct CavtreeSimilarity *sim);

/**
 * `S[i][j]`; NaN when the handle is null or indices are out of range.
 */
double cavtree_similarity_get(const struct CavtreeSimilarity *sim, uintptr_t i, uintptr_t j);

/**
 * Extract the hierarchy from a similarity matrix (betweenness ordering on
 * the undirected adjacency, most-similar attachment).
 */
struct CavtreeTree *cavtree_extract_tree(const struct CavtreeSimilarity *sim);

void cavtree_tree_free(struct CavtreeTree *tree);

/**
 * Serialize the tree as the tree.json document body.
 */
char *cavtree_tree_to_json(const struct CavtreeTree *tree);

/**
 * Render the tree in DOT format; node labels fall back to concept ids.
 */
char *cavtree_tree_to_dot(const struct CavtreeTree *tree);

/**
 * Run the whole pipeline from a JSON config document (same schema as the
 * CLI config file).
 */
int cavtree_pipeline_run(const char *config_json);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CAVTREE_H */
