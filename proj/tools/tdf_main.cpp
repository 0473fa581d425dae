// tdf: trusted-data filtering pipeline over a growing vector knowledge base.
//
// Subcommands: split, train-tree, filter, compare, serve-mock. All randomness
// flows from --seed through purpose-keyed derivation, so one number
// reproduces a whole experiment. Every flag can also come from the
// environment as TDF_<UPPERCASED-FLAG-NAME>.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdf/config.hpp"
#include "tdf/decision_tree.hpp"
#include "tdf/embedding.hpp"
#include "tdf/errors.hpp"
#include "tdf/evaluators.hpp"
#include "tdf/http_clients.hpp"
#include "tdf/knowledge.hpp"
#include "tdf/metrics.hpp"
#include "tdf/mock_server.hpp"
#include "tdf/pipeline.hpp"
#include "tdf/report_io.hpp"
#include "tdf/rng.hpp"
#include "tdf/vector_index.hpp"

namespace fs = std::filesystem;
using namespace tdf;

namespace {

constexpr std::size_t kEmbedDim = 64;

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::string mode = "self_nli";
    std::uint64_t seed = 0;
    double threshold = 0.85;
    int max_iterations = 5;
    int parallelism = 8;
    std::string index_mode;
    std::uint64_t nlist = 0;
    std::uint64_t nprobe = 8;

    // evaluator wiring
    std::string confidence_url;
    std::string nli_url;
    std::string embed_url;
    double mock_confidence = -1.0;
    double mock_nli = -1.0;
    int retries = 2;
};

void add_common_flags(CLI::App* cmd, CommonOptions& opts, bool with_filtering) {
    cmd->add_option("--config", opts.config_path, "flat key=value config file")
        ->envname("TDF_CONFIG");
    cmd->add_option("--seed", opts.seed, "top-level seed for the whole run")
        ->envname("TDF_SEED");
    cmd->add_option("--out", opts.out_dir, "output directory")->envname("TDF_OUT");
    if (with_filtering) {
        cmd->add_option("--threshold", opts.threshold, "trusted-match similarity threshold")
            ->envname("TDF_THRESHOLD");
        cmd->add_option("--max-iterations", opts.max_iterations, "filtering rounds")
            ->envname("TDF_MAX_ITERATIONS");
        cmd->add_option("--parallelism", opts.parallelism, "bounded evaluator fan-out")
            ->envname("TDF_PARALLELISM");
        cmd->add_option("--index", opts.index_mode, "knowledge-base index: flat or ivf")
            ->envname("TDF_INDEX");
        cmd->add_option("--nlist", opts.nlist, "IVF centroid count (0 = auto)")
            ->envname("TDF_NLIST");
        cmd->add_option("--nprobe", opts.nprobe, "IVF probed buckets")->envname("TDF_NPROBE");
    }
}

void add_evaluator_flags(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--confidence-url", opts.confidence_url,
                    "language-model endpoint (POST /confidence)")
        ->envname("TDF_CONFIDENCE_URL");
    cmd->add_option("--nli-url", opts.nli_url, "NLI endpoint (POST /nli)")->envname("TDF_NLI_URL");
    cmd->add_option("--embed-url", opts.embed_url,
                    "embedding endpoint (POST /embed); default: builtin hash embedder")
        ->envname("TDF_EMBED_URL");
    cmd->add_option("--mock-confidence", opts.mock_confidence,
                    "use the in-process confidence oracle at this accuracy")
        ->envname("TDF_MOCK_CONFIDENCE");
    cmd->add_option("--mock-nli", opts.mock_nli, "use the in-process NLI oracle at this accuracy")
        ->envname("TDF_MOCK_NLI");
    cmd->add_option("--retries", opts.retries, "evaluator retry budget")->envname("TDF_RETRIES");
}

// Layering: defaults < config file < environment/flags (CLI11 counts an
// env-sourced value like a flag, and a flag beats its env variable).
FilterConfig resolve_config(const CLI::App* cmd, const CommonOptions& opts) {
    FilterConfig config;
    if (!opts.config_path.empty()) {
        apply_config_values(config, load_config_file(opts.config_path));
    }
    if (cmd->count("--seed")) config.seed = opts.seed;
    if (cmd->get_option_no_throw("--mode") != nullptr && cmd->count("--mode")) {
        config.mode = filter_mode_from_string(opts.mode);
    }
    if (cmd->get_option_no_throw("--threshold") != nullptr) {
        if (cmd->count("--threshold")) config.threshold = opts.threshold;
        if (cmd->count("--max-iterations")) config.max_iterations = opts.max_iterations;
        if (cmd->count("--parallelism")) config.parallelism = opts.parallelism;
        if (cmd->count("--index")) {
            if (opts.index_mode == "flat") {
                config.index.mode = IndexMode::flat;
            } else if (opts.index_mode == "ivf") {
                config.index.mode = IndexMode::ivf;
            } else {
                throw TdfError(ErrorKind::config, "index must be flat or ivf");
            }
        }
        if (cmd->count("--nlist")) config.index.ivf.nlist = opts.nlist;
        if (cmd->count("--nprobe")) config.index.ivf.nprobe = opts.nprobe;
    }
    return config;
}

struct EvaluatorStack {
    std::unique_ptr<ConfidenceClient> confidence;
    std::unique_ptr<NliClient> nli;
    std::unique_ptr<Embedder> embedder;
    EvaluatorSet set;
};

EvaluatorStack make_evaluators(const CommonOptions& opts, const FilterConfig& config,
                               bool need_nli) {
    EvaluatorStack stack;
    if (!opts.confidence_url.empty()) {
        stack.confidence =
            std::make_unique<HttpConfidenceClient>(opts.confidence_url, config.parallelism);
    } else if (opts.mock_confidence >= 0.0) {
        stack.confidence = std::make_unique<MockConfidenceClient>(
            opts.mock_confidence, rng::derive_seed(config.seed, "mock-confidence"));
    } else {
        throw TdfError(ErrorKind::config,
                       "no confidence evaluator: pass --confidence-url or --mock-confidence");
    }
    if (need_nli) {
        if (!opts.nli_url.empty()) {
            stack.nli = std::make_unique<HttpNliClient>(opts.nli_url, config.parallelism);
        } else if (opts.mock_nli >= 0.0) {
            stack.nli = std::make_unique<MockNliClient>(opts.mock_nli,
                                                        rng::derive_seed(config.seed, "mock-nli"));
        } else {
            throw TdfError(ErrorKind::config, "no NLI evaluator: pass --nli-url or --mock-nli");
        }
    }
    if (!opts.embed_url.empty()) {
        stack.embedder = std::make_unique<HttpEmbedder>(opts.embed_url, config.parallelism);
    } else {
        stack.embedder =
            std::make_unique<HashingEmbedder>(rng::derive_seed(config.seed, "embedder"), kEmbedDim);
    }
    stack.set.confidence = stack.confidence.get();
    stack.set.nli = stack.nli.get();
    stack.set.retries = opts.retries;
    return stack;
}

TrustedIndex make_kb(const FilterConfig& config, std::size_t dim) {
    return TrustedIndex(dim, config.index.mode, config.index.ivf,
                        rng::derive_seed(config.seed, "index"));
}

// The kb seed file is an ordinary dataset; records flagged 0 are dropped,
// everything else is treated as trusted.
std::vector<KnowledgeItem> load_trusted(const std::string& path) {
    std::vector<KnowledgeItem> trusted;
    for (auto& item : load_dataset_file(path)) {
        if (item.gold_flag && *item.gold_flag == 0) continue;
        trusted.push_back(std::move(item));
    }
    return trusted;
}

int cmd_split(const CLI::App* cmd, const CommonOptions& opts, const std::string& data_path) {
    const auto config = resolve_config(cmd, opts);
    const auto items = load_dataset_file(data_path);
    const auto split = split_dataset(items, config.seed);
    fs::create_directories(opts.out_dir);
    write_dataset_file(opts.out_dir + "/train.jsonl", split.train);
    write_dataset_file(opts.out_dir + "/valid.jsonl", split.valid);
    write_dataset_file(opts.out_dir + "/test.jsonl", split.test);
    std::printf("split %zu items -> train %zu, valid %zu, test %zu (seed %llu)\n", items.size(),
                split.train.size(), split.valid.size(), split.test.size(),
                static_cast<unsigned long long>(config.seed));
    return 0;
}

int cmd_train_tree(const CLI::App* cmd, const CommonOptions& opts, const std::string& train_path,
                   const std::string& valid_path) {
    const auto config = resolve_config(cmd, opts);
    const auto train_items = load_dataset_file(train_path);
    auto stack = make_evaluators(opts, config, /*need_nli=*/true);

    // Seed kb for feature generation: the correct statements of the slice.
    std::vector<KnowledgeItem> trusted;
    for (const auto& item : train_items) {
        if (item.gold_flag && *item.gold_flag == 1) trusted.push_back(item);
    }
    TrustedIndex kb = make_kb(config, stack.embedder->dim());
    initialize_kb(kb, trusted, *stack.embedder);

    const auto [records, labels] =
        build_training_features(train_items, kb, stack.set, config, *stack.embedder);
    const auto tree = DecisionTree::train(records, labels, config.tree);

    fs::create_directories(opts.out_dir);
    const std::string tree_path = opts.out_dir + "/tree.json";
    std::ofstream out(tree_path);
    tree.save(out);
    std::printf("trained tree on %zu records (%zu nodes, depth %d) -> %s\n", records.size(),
                tree.nodes().size(), tree.depth(), tree_path.c_str());

    if (!valid_path.empty()) {
        const auto valid_items = load_dataset_file(valid_path);
        const auto [vrecords, vlabels] =
            build_training_features(valid_items, kb, stack.set, config, *stack.embedder);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < vrecords.size(); ++i) {
            if (tree.predict(vrecords[i]) == vlabels[i]) ++correct;
        }
        const double accuracy =
            vrecords.empty() ? 0.0 : static_cast<double>(correct) / vrecords.size();
        std::printf("validation accuracy: %.4f (%zu items)\n", accuracy, valid_items.size());
    }
    return 0;
}

int cmd_filter(const CLI::App* cmd, const CommonOptions& opts, const std::string& data_path,
               const std::string& kb_seed_path, const std::string& tree_path,
               const std::string& distractors_path, bool explain) {
    auto config = resolve_config(cmd, opts);
    const auto items = load_dataset_file(data_path);

    // Mode-specific inputs are checked before any evaluator call.
    std::optional<DecisionTree> tree;
    std::vector<KnowledgeItem> distractors;
    if (config.mode != FilterMode::basic) {
        if (tree_path.empty()) {
            throw TdfError(ErrorKind::config,
                           std::string(to_string(config.mode)) + " mode needs --tree");
        }
        std::ifstream in(tree_path);
        if (!in) {
            throw TdfError(ErrorKind::config, "cannot open tree snapshot '" + tree_path + "'");
        }
        tree = DecisionTree::load(in);
        if (config.mode == FilterMode::self_nli && kb_seed_path.empty()) {
            throw TdfError(ErrorKind::config, "self_nli mode needs --kb-seed");
        }
        if (config.mode == FilterMode::fake) {
            if (distractors_path.empty()) {
                throw TdfError(ErrorKind::config, "fake mode needs --distractors");
            }
            distractors = load_dataset_file(distractors_path);
        }
    }

    auto stack = make_evaluators(opts, config, config.mode != FilterMode::basic);

    fs::create_directories(opts.out_dir);
    FilterReport report;
    if (config.mode == FilterMode::basic) {
        report = run_basic(items, stack.set, config);
    } else {
        TrustedIndex kb = make_kb(config, stack.embedder->dim());
        if (!kb_seed_path.empty()) {
            initialize_kb(kb, load_trusted(kb_seed_path), *stack.embedder);
        }
        report = run_filter(items, kb, *tree, stack.set, config, *stack.embedder,
                            config.mode == FilterMode::fake ? &distractors : nullptr);
        std::ofstream kb_out(opts.out_dir + "/kb.jsonl");
        kb.save(kb_out);
    }

    write_text_file(opts.out_dir + "/manifest.json", manifest_text(report));

    std::int64_t accepted = 0, rejected = 0, deferred = 0;
    for (const auto& o : report.outcomes) {
        if (o.verdict == Verdict::accepted) ++accepted;
        else if (o.verdict == Verdict::rejected) ++rejected;
        else ++deferred;
    }
    std::printf("%s: %zu items -> accepted %lld, rejected %lld, deferred %lld (%zu iterations)\n",
                to_string(config.mode), items.size(), static_cast<long long>(accepted),
                static_cast<long long>(rejected), static_cast<long long>(deferred),
                report.iterations.size());

    const bool all_labeled = std::all_of(items.begin(), items.end(), [](const KnowledgeItem& k) {
        return k.gold_flag.has_value();
    });
    if (all_labeled && accepted + rejected > 0) {
        const auto scored = confusion(report.outcomes, items);
        const auto m = metrics(scored.cm);
        write_text_file(opts.out_dir + "/metrics.json",
                        metrics_json(m, scored.deferred).dump(2) + "\n");
        std::printf("accuracy %.4f  precision %.4f  recall %.4f  f1 %.4f  (deferred %lld)\n",
                    m.accuracy, m.precision, m.recall, m.f1,
                    static_cast<long long>(scored.deferred));
    }

    if (explain) {
        std::string paths;
        for (const auto& o : report.outcomes) {
            if (!o.path) continue;
            paths += o.id + ": " + o.path->to_string() + "\n";
        }
        write_text_file(opts.out_dir + "/paths.txt", paths);
    }
    std::printf("manifest: %s/manifest.json\n", opts.out_dir.c_str());
    return 0;
}

int cmd_compare(const CLI::App* cmd, const CommonOptions& opts,
                const std::vector<std::string>& manifest_paths, const std::string& data_path,
                const std::string& dataset_label, const std::string& model_label) {
    (void)resolve_config(cmd, opts);
    const auto items = load_dataset_file(data_path);
    std::vector<FilterReport> reports;
    reports.reserve(manifest_paths.size());
    for (const auto& path : manifest_paths) reports.push_back(load_manifest_file(path));
    std::vector<const FilterReport*> pointers;
    pointers.reserve(reports.size());
    for (const auto& r : reports) pointers.push_back(&r);

    const auto rows = compare_modes(pointers, items);
    const std::string table = render_comparison_text(rows, dataset_label, model_label);
    std::fputs(table.c_str(), stdout);

    fs::create_directories(opts.out_dir);
    write_text_file(opts.out_dir + "/comparison.txt", table);
    write_text_file(opts.out_dir + "/comparison.json",
                    comparison_json(rows, dataset_label, model_label).dump(2) + "\n");
    return 0;
}

int cmd_serve_mock(double confidence_accuracy, double nli_accuracy, std::uint64_t seed,
                   const std::string& host, int port, std::size_t embed_dim) {
    MockEvaluatorServer::Options options;
    options.confidence_accuracy = confidence_accuracy;
    options.nli_accuracy = nli_accuracy;
    options.seed = seed;
    options.embed_dim = embed_dim;
    options.log_requests = true;
    MockEvaluatorServer server(options);
    std::printf("mock evaluator service on %s:%d (confidence %.2f, nli %.2f, seed %llu)\n",
                host.c_str(), port, confidence_accuracy, nli_accuracy,
                static_cast<unsigned long long>(seed));
    server.serve_blocking(host, port);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trusted-data filtering pipeline"};
    app.require_subcommand(1);

    CommonOptions opts;

    auto* split_cmd = app.add_subcommand("split", "seeded 5/5/90 dataset split");
    std::string split_data;
    split_cmd->add_option("--data", split_data, "dataset file (one record per line)")
        ->required()
        ->envname("TDF_DATA");
    add_common_flags(split_cmd, opts, /*with_filtering=*/false);

    auto* train_cmd = app.add_subcommand("train-tree", "train the fusion decision tree");
    std::string train_path, valid_path;
    train_cmd->add_option("--train", train_path, "labeled training dataset")
        ->required()
        ->envname("TDF_TRAIN");
    train_cmd->add_option("--valid", valid_path, "labeled validation dataset")
        ->envname("TDF_VALID");
    add_common_flags(train_cmd, opts, /*with_filtering=*/true);
    add_evaluator_flags(train_cmd, opts);

    auto* filter_cmd = app.add_subcommand("filter", "run a filtering pass over a dataset");
    std::string filter_data, kb_seed_path, tree_path, distractors_path;
    bool explain = false;
    filter_cmd->add_option("--data", filter_data, "dataset to filter")
        ->required()
        ->envname("TDF_DATA");
    filter_cmd->add_option("--mode", opts.mode, "basic | self_nli | fake")->envname("TDF_MODE");
    filter_cmd->add_option("--kb-seed", kb_seed_path, "trusted statements to pre-store")
        ->envname("TDF_KB_SEED");
    filter_cmd->add_option("--tree", tree_path, "tree snapshot from train-tree")
        ->envname("TDF_TREE");
    filter_cmd->add_option("--distractors", distractors_path, "distractor pool for fake mode")
        ->envname("TDF_DISTRACTORS");
    filter_cmd->add_flag("--explain", explain, "write per-item decision paths");
    add_common_flags(filter_cmd, opts, /*with_filtering=*/true);
    add_evaluator_flags(filter_cmd, opts);

    auto* compare_cmd = app.add_subcommand("compare", "compare filtering runs side by side");
    std::vector<std::string> manifests;
    std::string compare_data, dataset_label = "-", model_label = "-";
    compare_cmd->add_option("manifests", manifests, "run manifest files")->required();
    compare_cmd->add_option("--data", compare_data, "labeled dataset the runs covered")
        ->required()
        ->envname("TDF_DATA");
    compare_cmd->add_option("--dataset-label", dataset_label, "table label");
    compare_cmd->add_option("--model-label", model_label, "table label");
    add_common_flags(compare_cmd, opts, /*with_filtering=*/false);

    auto* serve_cmd = app.add_subcommand("serve-mock", "serve the mock evaluator contracts");
    double conf_accuracy = 0.85, nli_accuracy = 0.95;
    std::uint64_t serve_seed = 0;
    std::string host = "127.0.0.1";
    int port = 8089;
    std::size_t embed_dim = kEmbedDim;
    serve_cmd->add_option("--confidence-accuracy", conf_accuracy, "confidence oracle accuracy")
        ->envname("TDF_CONFIDENCE_ACCURACY");
    serve_cmd->add_option("--nli-accuracy", nli_accuracy, "NLI oracle accuracy")
        ->envname("TDF_NLI_ACCURACY");
    serve_cmd->add_option("--seed", serve_seed, "oracle seed")->envname("TDF_SEED");
    serve_cmd->add_option("--host", host, "bind host");
    serve_cmd->add_option("--port", port, "bind port")->envname("TDF_PORT");
    serve_cmd->add_option("--embed-dim", embed_dim, "embedding dimension");

    CLI11_PARSE(app, argc, argv);

    try {
        if (split_cmd->parsed()) return cmd_split(split_cmd, opts, split_data);
        if (train_cmd->parsed()) return cmd_train_tree(train_cmd, opts, train_path, valid_path);
        if (filter_cmd->parsed()) {
            return cmd_filter(filter_cmd, opts, filter_data, kb_seed_path, tree_path,
                              distractors_path, explain);
        }
        if (compare_cmd->parsed()) {
            return cmd_compare(compare_cmd, opts, manifests, compare_data, dataset_label,
                               model_label);
        }
        if (serve_cmd->parsed()) {
            return cmd_serve_mock(conf_accuracy, nli_accuracy, serve_seed, host, port, embed_dim);
        }
    } catch (const TdfError& e) {
        std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
