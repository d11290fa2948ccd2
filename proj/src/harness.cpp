#include "cocolex/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace cocolex {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::ordered_json;

constexpr std::string_view kContextHeader = "Context:\n";
constexpr std::string_view kPassageSeparator = "\n\n";
constexpr std::string_view kSectionSeparator = "\n\n";
constexpr std::string_view kQuestionHeader = "Question: ";
constexpr std::string_view kAnswerCue = "\nAnswer:";

std::string render_context(const std::vector<std::pair<Passage, double>>& passages) {
    std::string ctx;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        if (i > 0) ctx += kPassageSeparator;
        ctx += passages[i].first.text;
    }
    return ctx;
}

const char* const kAdjectives[] = {
    "ancillary", "binding",    "contested", "dispositive", "equitable", "express",
    "implied",   "material",   "procedural", "rebuttable", "severable", "substantive",
};
const char* const kNouns[] = {
    "covenant", "easement", "estoppel", "indemnity", "lease",    "lien",    "mandate",
    "novation", "pleading", "remand",   "servitude", "tribunal", "waiver",  "statute",
};
const char* const kFillerTemplates[] = {
    "The %1 of the %2 remains %0 under section %3.",
    "Counsel for the %1 conceded that the %2 was %0.",
    "A %0 %1 does not displace the %2 described in section %3.",
    "Section %3 governs every %0 %1 touching the %2.",
    "Nothing in the %1 alters the %0 character of the %2.",
    "The parties stipulated that section %3 controls the %0 %1.",
};

struct CorpusRng {
    std::mt19937_64 rng;
    explicit CorpusRng(std::uint64_t seed) : rng(seed) {}
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng() % n); }
    const char* adjective() { return kAdjectives[below(std::size(kAdjectives))]; }
    const char* noun() { return kNouns[below(std::size(kNouns))]; }
    std::string number() { return std::to_string(100 + below(900)); }
};

std::string filler_sentence(CorpusRng& rng) {
    std::string out = kFillerTemplates[rng.below(std::size(kFillerTemplates))];
    const std::string subs[4] = {rng.adjective(), rng.noun(), rng.noun(), rng.number()};
    for (int i = 0; i < 4; ++i) {
        const std::string needle = "%" + std::to_string(i);
        for (std::size_t at = out.find(needle); at != std::string::npos; at = out.find(needle))
            out.replace(at, needle.size(), subs[i]);
    }
    return out;
}

std::string answer_clause(CorpusRng& rng) {
    std::string a = "the ";
    a += rng.adjective();
    a += " ";
    a += rng.noun();
    a += " must yield to the ";
    a += rng.adjective();
    a += " ";
    a += rng.noun();
    a += " except where section ";
    a += rng.number();
    a += " provides a ";
    a += rng.adjective();
    a += " ";
    a += rng.noun();
    return a;
}

std::string join_sentences(const std::vector<std::string>& sentences) {
    std::string out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i > 0) out += ' ';
        out += sentences[i];
    }
    return out;
}

struct ProcessedInstance {
    std::vector<InstanceScore> scores;
};

}  // namespace

std::vector<Instance> load_dataset(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DatasetError("cannot open dataset " + path.string(), 0);
    std::vector<Instance> instances;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded()) throw DatasetError("invalid JSON", line_no);
        if (!row.is_object()) throw DatasetError("expected a JSON object", line_no);
        for (const char* field : {"id", "query", "documents", "reference_answer"})
            if (!row.contains(field)) throw DatasetError(std::string("missing field `") + field + "`", line_no);
        Instance inst;
        if (!row["id"].is_string() || !row["query"].is_string() || !row["reference_answer"].is_string())
            throw DatasetError("id, query, and reference_answer must be strings", line_no);
        inst.id = row["id"].get<std::string>();
        inst.query = row["query"].get<std::string>();
        inst.reference_answer = row["reference_answer"].get<std::string>();
        if (!row["documents"].is_array() || row["documents"].empty())
            throw DatasetError("documents must be a non-empty array", line_no);
        for (const auto& doc : row["documents"]) {
            if (!doc.is_object() || !doc.contains("doc_id") || !doc.contains("text") ||
                !doc["doc_id"].is_string() || !doc["text"].is_string())
                throw DatasetError("each document needs string fields doc_id and text", line_no);
            inst.documents.push_back({doc["doc_id"].get<std::string>(), doc["text"].get<std::string>()});
        }
        if (!seen_ids.insert(inst.id).second)
            throw DatasetError("duplicate instance id `" + inst.id + "`", line_no);
        instances.push_back(std::move(inst));
    }
    return instances;
}

PromptInputs build_prompt(const Instance& instance,
                          const std::vector<std::pair<Passage, double>>& passages,
                          std::size_t token_budget) {
    const std::string tail = std::string(kQuestionHeader) + instance.query + std::string(kAnswerCue);
    PromptInputs out;
    std::string full;
    if (passages.empty()) {
        full = tail;
        out.context_begin = out.context_end = 0;
    } else {
        const std::string ctx = render_context(passages);
        full = std::string(kContextHeader);
        out.context_begin = full.size();
        full += ctx;
        out.context_end = full.size();
        full += kSectionSeparator;
        full += tail;
    }
    if (full.size() > token_budget)
        throw PromptTooLong("prompt is " + std::to_string(full.size()) + " tokens, budget " +
                            std::to_string(token_budget));
    out.tokens = byte_encode(full);
    out.tokens_without_context = byte_encode(tail);
    return out;
}

void generate_synthetic_corpus(std::uint64_t seed, std::size_t n_instances,
                               const std::filesystem::path& out_path) {
    if (n_instances == 0) throw InvalidConfig("need at least one instance");
    CorpusRng rng(seed);
    std::ofstream os(out_path);
    if (!os) throw Error("cannot open " + out_path.string() + " for writing");

    for (std::size_t i = 0; i < n_instances; ++i) {
        char id_buf[16];
        std::snprintf(id_buf, sizeof(id_buf), "inst-%04zu", i);

        const std::string topic = std::string(rng.adjective()) + " " + rng.noun() + " " + rng.number();
        const std::string answer = answer_clause(rng);
        const std::string marker =
            "Regarding the " + topic + ", the record states: " + answer + ".";

        auto make_body = [&](std::size_t lead, std::size_t trail, const std::string& middle) {
            std::vector<std::string> sentences;
            for (std::size_t s = 0; s < lead; ++s) sentences.push_back(filler_sentence(rng));
            sentences.push_back(middle);
            for (std::size_t s = 0; s < trail; ++s) sentences.push_back(filler_sentence(rng));
            return join_sentences(sentences);
        };
        const std::string relevant = make_body(3 + rng.below(3), 2 + rng.below(2), marker);

        // The distractor must not reproduce the planted span.
        std::string distractor;
        do {
            const std::string other_topic =
                std::string(rng.adjective()) + " " + rng.noun() + " " + rng.number();
            const std::string other_marker = "Regarding the " + other_topic +
                                             ", the record states: " + answer_clause(rng) + ".";
            distractor = make_body(3 + rng.below(3), 2 + rng.below(2), other_marker);
        } while (distractor.find(answer) != std::string::npos);

        ordered_json row;
        row["id"] = id_buf;
        row["query"] = "What does the record state regarding the " + topic + "?";
        row["documents"] = ordered_json::array();
        row["documents"].push_back({{"doc_id", std::string(id_buf) + "-doc-0"}, {"text", relevant}});
        row["documents"].push_back({{"doc_id", std::string(id_buf) + "-doc-1"}, {"text", distractor}});
        row["reference_answer"] = answer;
        os << row.dump() << '\n';
    }
    if (!os) throw Error("write failure on " + out_path.string());
}

ContextIndex build_document_index(const LanguageModel& model,
                                  const std::vector<InstanceDocument>& documents,
                                  std::size_t chunk_size, std::size_t stride, Metric metric) {
    std::vector<ContextIndex> parts;
    std::vector<std::size_t> offsets;
    std::size_t base = 0;
    for (const InstanceDocument& doc : documents) {
        const std::vector<TokenId> tokens = byte_encode(doc.text);
        if (tokens.size() < 2) continue;
        std::vector<DocumentChunk> chunks;
        for (std::size_t start = 0; start < tokens.size(); start += stride) {
            DocumentChunk chunk;
            chunk.start = start;
            const std::size_t end = std::min(start + chunk_size, tokens.size());
            chunk.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                tokens.begin() + static_cast<std::ptrdiff_t>(end));
            chunk.states = model.prefill(chunk.tokens).per_position_states;
            chunks.push_back(std::move(chunk));
            if (end == tokens.size()) break;
        }
        parts.push_back(ContextIndex::build_from_document_chunks(chunks, chunk_size, stride, metric));
        offsets.push_back(base);
        base += tokens.size();
    }
    if (parts.empty()) return ContextIndex::empty(model.hidden_dim(), metric);
    return ContextIndex::merge(parts, offsets);
}

nlohmann::ordered_json run_experiment(const ExperimentConfig& config) {
    if (config.strategies.empty()) throw InvalidConfig("configure at least one strategy");
    config.strategy.validate();

    std::vector<Instance> instances = load_dataset(config.dataset_path);
    if (config.max_instances > 0 && instances.size() > config.max_instances)
        instances.resize(config.max_instances);
    if (instances.empty()) throw DatasetError("dataset is empty", 0);

    const ReferenceNgramModel model(config.model);
    const Vocabulary vocab = Vocabulary::byte_level();
    const bool wants_doc_index =
        std::find(config.strategies.begin(), config.strategies.end(), Strategy::cocolex_plus) !=
        config.strategies.end();

    std::vector<ProcessedInstance> slots(instances.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};

    auto process_instance = [&](const Instance& instance) {
        ProcessedInstance out;
        std::vector<Passage> passages;
        for (const InstanceDocument& doc : instance.documents) {
            auto chunks = chunk_document(doc.doc_id, doc.text, config.passage_size_words,
                                         config.passage_overlap_words);
            passages.insert(passages.end(), std::make_move_iterator(chunks.begin()),
                            std::make_move_iterator(chunks.end()));
        }
        const auto ranked = bm25_rank(instance.query, passages, config.passages_top_k, config.bm25);
        const PromptInputs prompt = build_prompt(instance, ranked, config.prompt_token_budget);
        const std::string context_text = vocab.detokenize(
            std::span(prompt.tokens).subspan(prompt.context_begin,
                                             prompt.context_end - prompt.context_begin));
        const auto context_words = scoring_tokens(context_text);
        const auto reference_words = scoring_tokens(instance.reference_answer);

        ContextIndex doc_index = ContextIndex::empty(model.hidden_dim(), config.strategy.metric);
        double doc_index_seconds = 0.0;
        if (wants_doc_index) {
            const auto start = Clock::now();
            doc_index = build_document_index(model, instance.documents, config.doc_chunk_size,
                                             config.doc_chunk_stride, config.strategy.metric);
            doc_index_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        }

        for (Strategy strategy : config.strategies) {
            StrategyConfig cfg = config.strategy;
            cfg.strategy = strategy;
            const bool is_plus = strategy == Strategy::cocolex_plus;
            const GenerationResult result = decode(model, vocab, prompt, cfg, kEosToken,
                                                   is_plus ? &doc_index : nullptr);
            const auto generated_words = scoring_tokens(result.text);
            InstanceScore score;
            score.instance_id = instance.id;
            score.strategy = strategy_name(strategy);
            score.rouge_l_f1 = rouge_l_f1(generated_words, reference_words);
            score.context_coverage = context_coverage(generated_words, context_words, 4);
            score.tokens_generated = result.tokens.size();
            score.model_calls = result.model_calls;
            score.seconds_per_token = result.seconds_per_token;
            score.index_build_seconds = result.index_build_seconds;
            score.doc_index_build_seconds = is_plus ? doc_index_seconds : 0.0;
            score.text = result.text;
            out.scores.push_back(std::move(score));
        }
        return out;
    };

    auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= instances.size() || failed.load()) return;
            try {
                slots[idx] = process_instance(instances[idx]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::make_exception_ptr(
                        Error("instance " + instances[idx].id + ": " + [] {
                            try {
                                throw;
                            } catch (const std::exception& e) {
                                return std::string(e.what());
                            } catch (...) {
                                return std::string("unknown error");
                            }
                        }()));
                failed.store(true);
                return;
            }
        }
    };

    const std::size_t n_workers = std::max<std::size_t>(1, std::min(config.workers, instances.size()));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    // Report rows ordered by instance id, then strategy name.
    std::vector<InstanceScore> scores;
    for (const ProcessedInstance& slot : slots)
        scores.insert(scores.end(), slot.scores.begin(), slot.scores.end());
    std::stable_sort(scores.begin(), scores.end(), [](const InstanceScore& a, const InstanceScore& b) {
        if (a.instance_id != b.instance_id) return a.instance_id < b.instance_id;
        return a.strategy < b.strategy;
    });

    ordered_json config_json;
    config_json["dataset"] = config.dataset_path.string();
    config_json["template_version"] = std::string(kPromptTemplateVersion);
    ordered_json strategy_names = ordered_json::array();
    for (Strategy s : config.strategies) strategy_names.push_back(strategy_name(s));
    config_json["strategies"] = strategy_names;
    config_json["alpha"] = config.strategy.alpha;
    config_json["alpha_min"] = config.strategy.alpha_min;
    config_json["static_lambda"] = config.strategy.static_lambda;
    config_json["lambda_min"] = config.strategy.lambda_min;
    config_json["lambda_max"] = config.strategy.lambda_max;
    config_json["smoothing"] = config.strategy.smoothing;
    config_json["window"] = config.strategy.window;
    config_json["neighbors_k"] = config.strategy.neighbors_k;
    config_json["repetition_penalty"] = config.strategy.repetition_penalty;
    config_json["max_new_tokens"] = config.strategy.max_new_tokens;
    config_json["metric"] = config.strategy.metric == Metric::euclidean ? "euclidean" : "cosine";
    config_json["passages_top_k"] = config.passages_top_k;
    config_json["passage_size_words"] = config.passage_size_words;
    config_json["passage_overlap_words"] = config.passage_overlap_words;
    config_json["bm25_k1"] = config.bm25.k1;
    config_json["bm25_b"] = config.bm25.b;
    config_json["model_seed"] = config.model.seed;
    config_json["model_vocab_size"] = config.model.vocab_size;
    config_json["model_dim"] = config.model.dim;
    config_json["model_order"] = config.model.order;
    config_json["model_temperature"] = config.model.temperature;
    config_json["doc_chunk_size"] = config.doc_chunk_size;
    config_json["doc_chunk_stride"] = config.doc_chunk_stride;
    config_json["prompt_token_budget"] = config.prompt_token_budget;
    config_json["max_instances"] = config.max_instances;

    ordered_json report = build_report(config_json, scores);
    if (!config.output_path.empty()) {
        std::ofstream os(config.output_path);
        if (!os) throw Error("cannot open " + config.output_path.string() + " for writing");
        os << report.dump(2) << '\n';
        if (!os) throw Error("write failure on " + config.output_path.string());
    }
    return report;
}

}  // namespace cocolex
