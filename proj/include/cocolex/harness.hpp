#pragma once

/**
 * Dataset ingestion, prompt assembly, synthetic-corpus generation, and
 * experiment orchestration behind the CLI.
 *
 * Datasets are JSON-lines; each line is one instance with a unique id, a
 * query, one or more oracle documents, and a reference answer. The prompt
 * template is a versioned constant; the context span it reports covers
 * exactly the retrieved passage text (the copy index is built from it).
 */

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cocolex/decoding.hpp"
#include "cocolex/evaluation.hpp"
#include "cocolex/model.hpp"
#include "cocolex/retrieval.hpp"

namespace cocolex {

/// Byte-level end-of-sequence marker used by the harness.
inline constexpr TokenId kEosToken = 0;

inline constexpr std::string_view kPromptTemplateVersion = "cocolex-template-v1";

struct InstanceDocument {
    std::string doc_id;
    std::string text;
};

struct Instance {
    std::string id;
    std::string query;
    std::vector<InstanceDocument> documents;
    std::string reference_answer;
};

/// Parse a JSONL dataset. Malformed lines raise DatasetError carrying the
/// 1-based line number; duplicate ids are rejected by name.
std::vector<Instance> load_dataset(const std::filesystem::path& path);

/// Render the versioned template around the ranked passages and tokenize it.
/// Throws PromptTooLong when the result exceeds `token_budget`.
PromptInputs build_prompt(const Instance& instance,
                          const std::vector<std::pair<Passage, double>>& passages,
                          std::size_t token_budget);

/// Deterministic synthetic corpus: templated documents with planted verbatim
/// answer spans; each reference answer is an exact substring of exactly one
/// document of its instance. Same seed, same bytes.
void generate_synthetic_corpus(std::uint64_t seed, std::size_t n_instances,
                               const std::filesystem::path& out_path);

struct ExperimentConfig {
    std::filesystem::path dataset_path;
    std::vector<Strategy> strategies;
    StrategyConfig strategy;  // shared knobs; the strategy field is set per run

    std::size_t passages_top_k = 3;
    std::size_t passage_size_words = 256;
    std::size_t passage_overlap_words = 32;
    Bm25Params bm25;

    ReferenceModelConfig model;

    std::size_t doc_chunk_size = 512;  // cocolex_plus whole-document indexing
    std::size_t doc_chunk_stride = 256;

    std::size_t prompt_token_budget = 8192;
    std::size_t max_instances = 0;  // 0 = run everything
    std::size_t workers = 1;
    std::filesystem::path output_path;  // empty = do not write
};

/// Build the whole-document chunked index for one instance (all documents,
/// positions offset so they stay globally unique). Extra forward passes are
/// the cost CoCoLex+ pays; the caller times this.
ContextIndex build_document_index(const LanguageModel& model,
                                  const std::vector<InstanceDocument>& documents,
                                  std::size_t chunk_size, std::size_t stride, Metric metric);

/// Retrieve, build prompts, decode every configured strategy on every
/// instance, score, and assemble the report (written to output_path when
/// set). Deterministic given config and seeds, timing fields aside.
nlohmann::ordered_json run_experiment(const ExperimentConfig& config);

}  // namespace cocolex
