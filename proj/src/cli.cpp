#include "mir/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "mir/corpus.hpp"
#include "mir/domain.hpp"
#include "mir/encoder.hpp"
#include "mir/fixture.hpp"
#include "mir/manifest.hpp"
#include "mir/metrics.hpp"
#include "mir/rerank.hpp"
#include "mir/triplet.hpp"

namespace mir {

namespace {

// Applies config-file values to options the user did not pass on the
// command line. Config keys are the dash-case flag names.
class Binder {
public:
    template <class T>
    CLI::Option* bind(CLI::App* cmd, const std::string& flag, T& var, const std::string& desc) {
        CLI::Option* opt = cmd->add_option(flag, var, desc);
        const std::string key = flag.substr(2);
        appliers_.push_back([cmd, opt, &var, key](const json& cfg) {
            if (cmd->parsed() && opt->count() == 0 && cfg.contains(key)) var = cfg.at(key).get<T>();
        });
        return opt;
    }

    CLI::Option* bind_flag(CLI::App* cmd, const std::string& flag, bool& var, const std::string& desc) {
        CLI::Option* opt = cmd->add_flag(flag, var, desc);
        const std::string key = flag.substr(2);
        appliers_.push_back([cmd, opt, &var, key](const json& cfg) {
            if (cmd->parsed() && opt->count() == 0 && cfg.contains(key)) var = cfg.at(key).get<bool>();
        });
        return opt;
    }

    // Config values apply only to the invoked subcommand's options, so the
    // same key may mean different things to different commands.
    void apply(const json& cfg) {
        for (const auto& apply : appliers_) apply(cfg);
    }

private:
    std::vector<std::function<void(const json&)>> appliers_;
};

struct CommonArgs {
    std::string config_path;
    std::string proposals_path;
    std::string papers_path;
    std::string citations_path;
    std::string out_dir = "out";

    void bind_data(Binder& b, CLI::App* cmd, bool need_data = true) {
        b.bind(cmd, "--config", config_path, "JSON config file; flags override its values");
        b.bind(cmd, "--out", out_dir, "output directory");
        if (need_data) {
            b.bind(cmd, "--proposals", proposals_path, "proposals.jsonl");
            b.bind(cmd, "--papers", papers_path, "papers.jsonl");
            b.bind(cmd, "--citations", citations_path, "citations.jsonl");
        }
    }

    json load_config() const {
        if (config_path.empty()) return json::object();
        json cfg = json::parse(read_file(config_path), nullptr, false);
        if (cfg.is_discarded() || !cfg.is_object()) {
            throw ValidationError("config file is not a JSON object: " + config_path);
        }
        return cfg;
    }

    IngestResult load_mag(ManifestEntry& entry) const {
        if (proposals_path.empty() || papers_path.empty() || citations_path.empty()) {
            throw ValidationError("--proposals, --papers and --citations are required");
        }
        record_input(entry, proposals_path);
        record_input(entry, papers_path);
        record_input(entry, citations_path);
        return ingest_files(proposals_path, papers_path, citations_path);
    }
};

std::string rejects_to_jsonl(const std::vector<Reject>& rejects) {
    std::ostringstream out;
    for (const Reject& r : rejects) {
        out << json{{"stream", r.stream}, {"line", r.line}, {"reason", r.reason}}.dump() << '\n';
    }
    return out.str();
}

struct DomainArgs {
    std::string embedder = "hashing";  // hashing | checkpoint | store
    int dim = 256;
    std::string checkpoint_path;
    std::string store_path;
    std::string entities_path;

    void bind(Binder& b, CLI::App* cmd) {
        b.bind(cmd, "--domain-embedder", embedder, "domain embedder: hashing | checkpoint | store");
        b.bind(cmd, "--domain-dim", dim, "hashing embedder dimension");
        b.bind(cmd, "--domain-checkpoint", checkpoint_path, "reference-encoder checkpoint for domain vectors");
        b.bind(cmd, "--domain-vectors", store_path, "precomputed domain-vector store (.mire)");
        b.bind(cmd, "--entities", entities_path, "entities.jsonl with per-owner entity sets");
    }

    DomainVectorStore build(const Mag& mag, const std::vector<std::string>& paper_pool,
                            const std::vector<std::string>& proposal_pool, ManifestEntry& entry) const {
        if (embedder == "store") {
            if (store_path.empty()) throw ValidationError("--domain-vectors is required with --domain-embedder store");
            record_input(entry, store_path);
            const EmbeddingStore store = load_store(read_file(store_path));
            DomainVectorStore out;
            for (std::size_t i = 0; i < store.ids.size(); ++i) {
                out.put({store.row_vector(i), store.ids[i], OwnerRole::paper});
            }
            return out;
        }
        std::unique_ptr<TextEmbedder> backend;
        if (embedder == "hashing") {
            backend = std::make_unique<HashingEmbedder>(dim);
        } else if (embedder == "checkpoint") {
            if (checkpoint_path.empty()) {
                throw ValidationError("--domain-checkpoint is required with --domain-embedder checkpoint");
            }
            record_input(entry, checkpoint_path);
            backend = std::make_unique<ReferenceEncoder>(load_checkpoint(read_file(checkpoint_path)));
        } else {
            throw ValidationError("unknown --domain-embedder: " + embedder);
        }
        std::map<std::string, EntitySet> entities;
        const std::map<std::string, EntitySet>* entities_ptr = nullptr;
        if (!entities_path.empty()) {
            record_input(entry, entities_path);
            entities = load_entities_file(entities_path);
            entities_ptr = &entities;
        }
        return build_domain_vectors(mag, paper_pool, proposal_pool, *backend, entities_ptr);
    }
};

int cmd_ingest(const CommonArgs& common) {
    ManifestEntry entry;
    entry.command = "ingest";
    const IngestResult result = common.load_mag(entry);
    const MagStats s = stats(result.mag);
    emit_artifact(entry, common.out_dir + "/rejects.jsonl", rejects_to_jsonl(result.rejects));
    json summary = stats_to_json(s);
    summary["rejects"] = result.rejects.size();
    summary["edges"] = result.mag.edge_count();
    emit_artifact(entry, common.out_dir + "/mag_summary.json", summary.dump(2) + "\n");
    append_manifest(common.out_dir, entry);
    std::cout << "ingested " << result.mag.proposals().size() << " proposals, "
              << result.mag.papers().size() << " papers, " << result.mag.edge_count() << " edges; "
              << result.rejects.size() << " rejects\n";
    return 0;
}

int cmd_stats(const CommonArgs& common) {
    ManifestEntry entry;
    entry.command = "stats";
    const IngestResult result = common.load_mag(entry);
    const MagStats s = stats(result.mag);
    emit_artifact(entry, common.out_dir + "/stats.tsv", stats_to_tsv(s));
    emit_artifact(entry, common.out_dir + "/stats.json", stats_to_json(s).dump(2) + "\n");
    append_manifest(common.out_dir, entry);
    std::cout << stats_to_tsv(s);
    return 0;
}

int cmd_fixture(const CommonArgs& common, const FixtureConfig& config) {
    ManifestEntry entry;
    entry.command = "fixture";
    entry.config = json{{"proposals", config.proposals},
                        {"papers", config.papers},
                        {"topics", config.topics},
                        {"seed", config.seed}};
    const FixtureData data = generate_fixture(config);
    emit_artifact(entry, common.out_dir + "/proposals.jsonl", data.proposals_jsonl);
    emit_artifact(entry, common.out_dir + "/papers.jsonl", data.papers_jsonl);
    emit_artifact(entry, common.out_dir + "/citations.jsonl", data.citations_jsonl);

    std::istringstream p(data.proposals_jsonl), a(data.papers_jsonl), c(data.citations_jsonl);
    const IngestResult ing = ingest(p, a, c);
    const FixtureCheck check = check_fixture(ing.mag, config);
    json report{{"ok", check.ok},
                {"mi_edges", check.mi_edges},
                {"non_mi_edges", check.non_mi_edges},
                {"fooler_papers", check.fooler_papers},
                {"problems", check.problems}};
    emit_artifact(entry, common.out_dir + "/fixture_check.json", report.dump(2) + "\n");
    append_manifest(common.out_dir, entry);
    if (!check.ok) {
        std::cerr << "fixture self-check failed:\n";
        for (const std::string& p : check.problems) std::cerr << "  " << p << '\n';
        return 2;
    }
    std::cout << "fixture written to " << common.out_dir << " (" << check.mi_edges << " MI edges, "
              << check.non_mi_edges << " non-MI edges); self-check ok\n";
    return 0;
}

int cmd_synth(const CommonArgs& common, const DomainArgs& domain, const SynthConfig& config) {
    ManifestEntry entry;
    entry.command = "synth";
    entry.config = json{{"alpha", config.alpha},
                        {"seed", config.seed},
                        {"epochs", config.epochs},
                        {"negative-draw",
                         config.negative_draw == NegativeDrawMode::per_sample ? "per_sample" : "per_triplet"}};
    const IngestResult ing = common.load_mag(entry);
    const std::vector<std::string> pool = train_corpus(ing.mag);
    if (pool.empty()) throw ValidationError("no train-split citations; nothing to synthesize from");
    DomainVectorStore vectors;
    const DomainVectorStore* vectors_ptr = nullptr;
    if (config.alpha > 0.0) {
        vectors = domain.build(ing.mag, pool, ing.mag.proposal_ids(Split::train), entry);
        vectors_ptr = &vectors;
    }
    const SynthResult result = synthesize(ing.mag, pool, vectors_ptr, config);
    emit_artifact(entry, common.out_dir + "/triplets.jsonl", groups_to_jsonl(result.groups));
    emit_artifact(entry, common.out_dir + "/synth_skips.jsonl", skips_to_jsonl(result.skips));
    append_manifest(common.out_dir, entry);
    std::cout << "synthesized " << result.groups.size() << " triplet groups (" << result.skips.size()
              << " skips)\n";
    return 0;
}

int cmd_train(const CommonArgs& common, const DomainArgs& domain, const SynthConfig& synth_config,
              const TrainConfig& train_config) {
    ManifestEntry entry;
    entry.command = "train";
    entry.config = json{{"margin", train_config.margin},
                        {"learning-rate", train_config.learning_rate},
                        {"epochs", train_config.epochs},
                        {"batch-size", train_config.batch_size},
                        {"alpha", synth_config.alpha},
                        {"seed", train_config.seed},
                        {"d-in", train_config.encoder.d_in},
                        {"d-out", train_config.encoder.d_out}};
    const IngestResult ing = common.load_mag(entry);
    const std::vector<std::string> pool = train_corpus(ing.mag);
    if (pool.empty()) throw ValidationError("no train-split citations; nothing to train on");
    DomainVectorStore vectors;
    const DomainVectorStore* vectors_ptr = nullptr;
    if (synth_config.alpha > 0.0) {
        vectors = domain.build(ing.mag, pool, ing.mag.proposal_ids(Split::train), entry);
        vectors_ptr = &vectors;
    }
    const TrainResult result = train(ing.mag, pool, vectors_ptr, synth_config, train_config);
    emit_artifact(entry, common.out_dir + "/checkpoint.mirt", save_checkpoint(result.params));
    emit_artifact(entry, common.out_dir + "/loss_report.jsonl", loss_reports_to_jsonl(result.reports));
    emit_artifact(entry, common.out_dir + "/train_skips.jsonl", skips_to_jsonl(result.skips));
    append_manifest(common.out_dir, entry);
    const double last = result.reports.empty() ? 0.0 : result.reports.back().loss.joint;
    std::cout << "trained " << train_config.epochs << " epochs; final batch joint loss " << last << '\n';
    return 0;
}

int cmd_embed(const CommonArgs& common, const std::string& checkpoint_path, const std::string& what,
              const std::string& setting_name, const std::string& split_name) {
    ManifestEntry entry;
    entry.command = "embed";
    entry.config = json{{"what", what}, {"setting", setting_name}, {"split", split_name}};
    const IngestResult ing = common.load_mag(entry);
    if (checkpoint_path.empty()) throw ValidationError("--checkpoint is required");
    record_input(entry, checkpoint_path);
    const ReferenceEncoder encoder(load_checkpoint(read_file(checkpoint_path)));

    if (what == "corpus") {
        const CorpusSetting setting = corpus_setting_from_string(setting_name);
        std::vector<EmbedWarning> warnings;
        const EmbeddingStore store = embed_corpus(encoder, ing.mag, corpus(ing.mag, setting), &warnings);
        for (const EmbedWarning& w : warnings) std::cerr << "warning: " << w.paper_id << ": " << w.reason << '\n';
        emit_artifact(entry, common.out_dir + "/corpus_" + setting_name + ".mire", save_store(store));
        append_manifest(common.out_dir, entry);
        std::cout << "embedded " << store.ids.size() << " corpus papers\n";
    } else if (what == "proposals") {
        const Split split = split_from_string(split_name);
        const EmbeddingStore store = embed_proposals(encoder, ing.mag, ing.mag.proposal_ids(split));
        emit_artifact(entry, common.out_dir + "/proposals_" + split_name + ".mire", save_store(store));
        append_manifest(common.out_dir, entry);
        std::cout << "embedded " << store.ids.size() << " proposals\n";
    } else {
        throw ValidationError("--what must be corpus or proposals");
    }
    return 0;
}

int cmd_retrieve(const CommonArgs& common, const std::string& checkpoint_path,
                 const std::string& store_path, const std::string& proposal_store_path,
                 const std::string& setting_name, const std::string& split_name) {
    ManifestEntry entry;
    entry.command = "retrieve";
    entry.config = json{{"setting", setting_name}, {"split", split_name}};
    const IngestResult ing = common.load_mag(entry);

    std::unique_ptr<ReferenceEncoder> encoder;
    if (!checkpoint_path.empty()) {
        record_input(entry, checkpoint_path);
        encoder = std::make_unique<ReferenceEncoder>(load_checkpoint(read_file(checkpoint_path)));
    }

    EmbeddingStore store;
    if (!store_path.empty()) {
        record_input(entry, store_path);
        store = load_store(read_file(store_path));
    } else if (encoder) {
        const CorpusSetting setting = corpus_setting_from_string(setting_name);
        store = embed_corpus(*encoder, ing.mag, corpus(ing.mag, setting));
    } else {
        throw ValidationError("--checkpoint or --store is required");
    }

    // Proposal vectors come from the encoder or from a precomputed store.
    std::optional<EmbeddingStore> proposal_store;
    if (!proposal_store_path.empty()) {
        record_input(entry, proposal_store_path);
        proposal_store = load_store(read_file(proposal_store_path));
    } else if (!encoder) {
        throw ValidationError("--checkpoint or --proposal-store is required");
    }

    std::vector<Ranking> rankings;
    for (const std::string& pid : ing.mag.proposal_ids(split_from_string(split_name))) {
        if (proposal_store) {
            const auto it = std::find(proposal_store->ids.begin(), proposal_store->ids.end(), pid);
            if (it == proposal_store->ids.end()) {
                throw ValidationError("proposal " + pid + " missing from --proposal-store");
            }
            const std::size_t row = static_cast<std::size_t>(it - proposal_store->ids.begin());
            rankings.push_back(rank_by_vector(pid, proposal_store->row_vector(row), store));
        } else {
            rankings.push_back(rank(*encoder, ing.mag.proposal(pid), store));
        }
    }
    emit_artifact(entry, common.out_dir + "/rankings_" + setting_name + ".jsonl", rankings_to_jsonl(rankings));
    append_manifest(common.out_dir, entry);
    std::cout << "ranked " << store.ids.size() << " papers for " << rankings.size() << " proposals\n";
    return 0;
}

std::map<std::string, std::set<std::string>> relevant_sets(const Mag& mag, Split split) {
    std::map<std::string, std::set<std::string>> out;
    for (const std::string& pid : mag.proposal_ids(split)) {
        const std::vector<std::string> mi = mag.mi_papers(pid);
        out[pid] = std::set<std::string>(mi.begin(), mi.end());
    }
    return out;
}

int cmd_eval(const CommonArgs& common, const std::string& checkpoint_path,
             const std::string& rankings_path, const std::string& setting_name, std::vector<int> k_list) {
    ManifestEntry entry;
    entry.command = "eval";
    if (k_list.empty()) k_list = {3, 5};
    std::sort(k_list.begin(), k_list.end());
    entry.config = json{{"setting", setting_name}, {"k", k_list}};
    const IngestResult ing = common.load_mag(entry);

    EvalReport report;
    if (!rankings_path.empty()) {
        record_input(entry, rankings_path);
        std::ifstream in(rankings_path);
        if (!in) throw ValidationError("cannot open " + rankings_path);
        const std::vector<Ranking> rankings = rankings_from_jsonl(in);
        report = evaluate_rankings(rankings, relevant_sets(ing.mag, Split::test), k_list, setting_name);
    } else {
        if (checkpoint_path.empty()) throw ValidationError("--checkpoint or --rankings is required");
        record_input(entry, checkpoint_path);
        const ReferenceEncoder encoder(load_checkpoint(read_file(checkpoint_path)));
        report = evaluate(encoder, ing.mag, corpus_setting_from_string(setting_name), k_list);
    }
    emit_artifact(entry, common.out_dir + "/eval_" + setting_name + ".tsv", eval_to_tsv(report));
    emit_artifact(entry, common.out_dir + "/eval_" + setting_name + ".json", eval_to_json(report).dump(2) + "\n");
    append_manifest(common.out_dir, entry);
    std::cout << eval_to_tsv(report);
    return 0;
}

int cmd_elbow(const CommonArgs& common, const std::string& checkpoint_path,
              const std::string& setting_name, int k_max) {
    ManifestEntry entry;
    entry.command = "elbow";
    entry.config = json{{"setting", setting_name}, {"k-max", k_max}};
    const IngestResult ing = common.load_mag(entry);
    if (checkpoint_path.empty()) throw ValidationError("--checkpoint is required");
    record_input(entry, checkpoint_path);
    const ReferenceEncoder encoder(load_checkpoint(read_file(checkpoint_path)));

    const CorpusSetting setting = corpus_setting_from_string(setting_name);
    const EmbeddingStore store = embed_corpus(encoder, ing.mag, corpus(ing.mag, setting));
    std::vector<Ranking> rankings;
    for (const std::string& pid : ing.mag.proposal_ids(Split::dev)) {
        rankings.push_back(rank(encoder, ing.mag.proposal(pid), store));
    }
    if (rankings.empty()) throw ValidationError("elbow needs a dev split");
    const int capped = std::min<int>(k_max, static_cast<int>(store.ids.size()));
    const auto curve = coverage_curve(rankings, relevant_sets(ing.mag, Split::dev), capped);
    const int k = elbow(curve);

    std::ostringstream tsv;
    tsv << "k\tcoverage\n";
    for (const auto& [kk, cov] : curve) tsv << kk << '\t' << cov << '\n';
    emit_artifact(entry, common.out_dir + "/coverage_" + setting_name + ".tsv", tsv.str());
    emit_artifact(entry, common.out_dir + "/elbow_" + setting_name + ".json",
                  json{{"setting", setting_name}, {"k", k}}.dump(2) + "\n");
    append_manifest(common.out_dir, entry);
    std::cout << "elbow k = " << k << " (" << setting_name << ")\n";
    return 0;
}

struct RerankArgs {
    std::string rankings_path;
    std::string checkpoint_path;
    std::string endpoint = "http://127.0.0.1:8787";
    std::string cache_dir;
    std::string prompt_dir;
    std::string strategy = "pointwise";
    std::string shots = "zero";
    std::string input_mode = "abstract";
    std::string setting = "restricted";
    std::string model_id = "judge-default";
    int k = 0;  // 0 = setting default (restricted 10, extended 20)
    bool use_elbow = false;
    int elbow_k_max = 100;
    double temperature = 0.0;
    int max_parallel = 1;
    int few_shot_count = 2;
    int max_tokens = 1024;
    int max_retries = 3;
    int backoff_ms = 200;
    std::uint64_t seed = 0;
    std::vector<int> eval_k;
};

int cmd_rerank(const CommonArgs& common, const RerankArgs& args) {
    ManifestEntry entry;
    entry.command = "rerank";
    const IngestResult ing = common.load_mag(entry);
    if (args.rankings_path.empty()) throw ValidationError("--rankings is required");
    record_input(entry, args.rankings_path);
    std::ifstream in(args.rankings_path);
    if (!in) throw ValidationError("cannot open " + args.rankings_path);
    const std::vector<Ranking> first_stage = rankings_from_jsonl(in);

    JudgeConfig config;
    config.strategy = judge_strategy_from_string(args.strategy);
    config.shots = shot_mode_from_string(args.shots);
    config.input_mode = input_mode_from_string(args.input_mode);
    config.model_id = args.model_id;
    config.temperature = args.temperature;
    config.max_parallel = args.max_parallel;
    config.few_shot_count = args.few_shot_count;
    config.max_tokens = args.max_tokens;
    config.retry = {args.max_retries, args.backoff_ms};
    config.seed = args.seed;

    std::unique_ptr<ReferenceEncoder> encoder;
    if (!args.checkpoint_path.empty()) {
        record_input(entry, args.checkpoint_path);
        encoder = std::make_unique<ReferenceEncoder>(load_checkpoint(read_file(args.checkpoint_path)));
    }

    if (args.k > 0) {
        config.k = args.k;
    } else if (args.use_elbow) {
        if (!encoder) throw ValidationError("--use-elbow needs --checkpoint");
        const CorpusSetting setting = corpus_setting_from_string(args.setting);
        const EmbeddingStore store = embed_corpus(*encoder, ing.mag, corpus(ing.mag, setting));
        std::vector<Ranking> dev_rankings;
        for (const std::string& pid : ing.mag.proposal_ids(Split::dev)) {
            dev_rankings.push_back(rank(*encoder, ing.mag.proposal(pid), store));
        }
        if (dev_rankings.empty()) throw ValidationError("--use-elbow needs a dev split");
        const int capped = std::min<int>(args.elbow_k_max, static_cast<int>(store.ids.size()));
        config.k = elbow(coverage_curve(dev_rankings, relevant_sets(ing.mag, Split::dev), capped));
    } else {
        config.k = corpus_setting_from_string(args.setting) == CorpusSetting::restricted ? 10 : 20;
    }
    entry.config = json{{"strategy", args.strategy}, {"shots", args.shots},
                        {"input-mode", args.input_mode}, {"setting", args.setting},
                        {"k", config.k},               {"model", args.model_id},
                        {"temperature", args.temperature}, {"seed", args.seed}};

    std::string cache_dir = args.cache_dir;
    if (const char* env = std::getenv("MIR_CACHE_DIR")) cache_dir = env;
    if (cache_dir.empty()) cache_dir = common.out_dir + "/judge_cache";
    const TranscriptCache cache(cache_dir);
    const PromptLibrary prompts =
        args.prompt_dir.empty() ? PromptLibrary::load() : PromptLibrary::load(args.prompt_dir);
    HttpJudgeClient client(args.endpoint);

    std::vector<int> k_list = args.eval_k;
    if (k_list.empty()) k_list = {3, 5};
    std::sort(k_list.begin(), k_list.end());
    const RerankResult result = rerank_pipeline(config, ing.mag, first_stage, client, &cache, prompts,
                                                encoder.get(), k_list);

    emit_artifact(entry, common.out_dir + "/reranked_" + args.setting + ".jsonl",
                  rankings_to_jsonl(result.rankings));
    std::ostringstream judgments;
    for (const json& j : result.judgment_log) judgments << j.dump() << '\n';
    emit_artifact(entry, common.out_dir + "/judgments.jsonl", judgments.str());
    emit_artifact(entry, common.out_dir + "/cost_report.json", cost_report_to_json(result.cost).dump(2) + "\n");
    emit_artifact(entry, common.out_dir + "/rerank_eval.tsv", eval_to_tsv(result.eval));
    emit_artifact(entry, common.out_dir + "/rerank_eval.json", eval_to_json(result.eval).dump(2) + "\n");
    append_manifest(common.out_dir, entry);

    if (result.aborted) {
        std::cerr << "rerank aborted: judge backend unreachable for more than half the calls; "
                     "partial artifacts written to "
                  << common.out_dir << '\n';
        return 2;
    }
    std::cout << eval_to_tsv(result.eval);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"methodology-inspiration retrieval pipeline"};
    app.require_subcommand(1);
    Binder binder;

    CommonArgs common;
    FixtureConfig fixture_config;
    DomainArgs domain;
    SynthConfig synth_config;
    TrainConfig train_config;
    std::string negative_draw = "per_sample";
    std::string checkpoint_path, store_path, proposal_store_path, rankings_path;
    std::string what = "corpus", setting_name = "restricted", split_name = "test";
    std::vector<int> k_list;
    int k_max = 100;
    RerankArgs rerank_args;

    CLI::App* ingest_cmd = app.add_subcommand("ingest", "validate data and build the citation graph");
    common.bind_data(binder, ingest_cmd);

    CLI::App* stats_cmd = app.add_subcommand("stats", "per-split dataset statistics");
    common.bind_data(binder, stats_cmd);

    CLI::App* fixture_cmd = app.add_subcommand("fixture", "emit the planted-structure synthetic dataset");
    common.bind_data(binder, fixture_cmd, false);
    binder.bind(fixture_cmd, "--proposals", fixture_config.proposals, "number of proposals");
    binder.bind(fixture_cmd, "--papers", fixture_config.papers, "number of papers");
    binder.bind(fixture_cmd, "--topics", fixture_config.topics, "number of latent topics");
    binder.bind(fixture_cmd, "--seed", fixture_config.seed, "generator seed");

    CLI::App* synth_cmd = app.add_subcommand("synth", "synthesize training triplets");
    common.bind_data(binder, synth_cmd);
    domain.bind(binder, synth_cmd);
    binder.bind(synth_cmd, "--alpha", synth_config.alpha, "hard-negative mixing ratio in [0,1]");
    binder.bind(synth_cmd, "--seed", synth_config.seed, "sampling seed");
    binder.bind(synth_cmd, "--epochs", synth_config.epochs, "epochs to synthesize");
    binder.bind(synth_cmd, "--negative-draw", negative_draw, "per_sample | per_triplet");

    CLI::App* train_cmd = app.add_subcommand("train", "train the reference encoder");
    common.bind_data(binder, train_cmd);
    domain.bind(binder, train_cmd);
    binder.bind(train_cmd, "--alpha", synth_config.alpha, "hard-negative mixing ratio in [0,1]");
    binder.bind(train_cmd, "--seed", train_config.seed, "seed for init and sampling");
    binder.bind(train_cmd, "--epochs", train_config.epochs, "training epochs");
    binder.bind(train_cmd, "--batch-size", train_config.batch_size, "sample groups per step");
    binder.bind(train_cmd, "--margin", train_config.margin, "triplet margin");
    binder.bind(train_cmd, "--learning-rate", train_config.learning_rate, "gradient-descent step size");
    binder.bind(train_cmd, "--d-in", train_config.encoder.d_in, "token embedding dimension");
    binder.bind(train_cmd, "--d-out", train_config.encoder.d_out, "output dimension");
    binder.bind(train_cmd, "--negative-draw", negative_draw, "per_sample | per_triplet");

    CLI::App* embed_cmd = app.add_subcommand("embed", "precompute embeddings into a store");
    common.bind_data(binder, embed_cmd);
    binder.bind(embed_cmd, "--checkpoint", checkpoint_path, "encoder checkpoint");
    binder.bind(embed_cmd, "--what", what, "corpus | proposals");
    binder.bind(embed_cmd, "--setting", setting_name, "restricted | extended");
    binder.bind(embed_cmd, "--split", split_name, "train | dev | test (for --what proposals)");

    CLI::App* retrieve_cmd = app.add_subcommand("retrieve", "rank the corpus per proposal");
    common.bind_data(binder, retrieve_cmd);
    binder.bind(retrieve_cmd, "--checkpoint", checkpoint_path, "encoder checkpoint");
    binder.bind(retrieve_cmd, "--store", store_path, "precomputed corpus store (.mire)");
    binder.bind(retrieve_cmd, "--proposal-store", proposal_store_path,
                "precomputed proposal store (.mire)");
    binder.bind(retrieve_cmd, "--setting", setting_name, "restricted | extended");
    binder.bind(retrieve_cmd, "--split", split_name, "proposal split to rank for");

    CLI::App* eval_cmd = app.add_subcommand("eval", "Recall@k and mAP on the test split");
    common.bind_data(binder, eval_cmd);
    binder.bind(eval_cmd, "--checkpoint", checkpoint_path, "encoder checkpoint");
    binder.bind(eval_cmd, "--rankings", rankings_path, "precomputed rankings.jsonl");
    binder.bind(eval_cmd, "--setting", setting_name, "restricted | extended");
    binder.bind(eval_cmd, "--k", k_list, "recall cutoffs (repeatable)");

    CLI::App* elbow_cmd = app.add_subcommand("elbow", "pick the re-ranking cutoff on the dev split");
    common.bind_data(binder, elbow_cmd);
    binder.bind(elbow_cmd, "--checkpoint", checkpoint_path, "encoder checkpoint");
    binder.bind(elbow_cmd, "--setting", setting_name, "restricted | extended");
    binder.bind(elbow_cmd, "--k-max", k_max, "largest k on the coverage curve");

    CLI::App* rerank_cmd = app.add_subcommand("rerank", "LLM re-ranking of first-stage results");
    common.bind_data(binder, rerank_cmd);
    binder.bind(rerank_cmd, "--rankings", rerank_args.rankings_path, "first-stage rankings.jsonl");
    binder.bind(rerank_cmd, "--checkpoint", rerank_args.checkpoint_path, "encoder for few-shot retrieval");
    binder.bind(rerank_cmd, "--endpoint", rerank_args.endpoint, "judge backend endpoint");
    binder.bind(rerank_cmd, "--cache-dir", rerank_args.cache_dir, "transcript cache directory");
    binder.bind(rerank_cmd, "--prompt-dir", rerank_args.prompt_dir, "prompt template directory");
    binder.bind(rerank_cmd, "--strategy", rerank_args.strategy, "pointwise | agent");
    binder.bind(rerank_cmd, "--shots", rerank_args.shots, "zero | few");
    binder.bind(rerank_cmd, "--input-mode", rerank_args.input_mode, "abstract | full_paper");
    binder.bind(rerank_cmd, "--setting", rerank_args.setting, "restricted | extended");
    binder.bind(rerank_cmd, "--model", rerank_args.model_id, "judge model id");
    binder.bind(rerank_cmd, "--k", rerank_args.k, "re-ranking cutoff (0 = setting default)");
    binder.bind_flag(rerank_cmd, "--use-elbow", rerank_args.use_elbow, "pick k via the dev-split elbow");
    binder.bind(rerank_cmd, "--temperature", rerank_args.temperature, "judge temperature");
    binder.bind(rerank_cmd, "--max-parallel", rerank_args.max_parallel, "concurrent judge calls");
    binder.bind(rerank_cmd, "--few-shot-count", rerank_args.few_shot_count, "exemplars per proposal");
    binder.bind(rerank_cmd, "--max-tokens", rerank_args.max_tokens, "judge response budget");
    binder.bind(rerank_cmd, "--max-retries", rerank_args.max_retries, "retries per judge call");
    binder.bind(rerank_cmd, "--backoff-ms", rerank_args.backoff_ms, "initial retry backoff");
    binder.bind(rerank_cmd, "--seed", rerank_args.seed, "few-shot sampling seed");
    binder.bind(rerank_cmd, "--eval-k", rerank_args.eval_k, "recall cutoffs for the post-rerank eval");

    std::vector<std::string> argv_copy = args;
    std::vector<char*> argv;
    argv.reserve(argv_copy.size());
    std::string program = "mir";
    argv.push_back(program.data());
    for (std::string& a : argv_copy) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        binder.apply(common.load_config());
        synth_config.negative_draw = negative_draw == "per_triplet" ? NegativeDrawMode::per_triplet
                                     : negative_draw == "per_sample"
                                         ? NegativeDrawMode::per_sample
                                         : throw ValidationError("unknown --negative-draw: " + negative_draw);
        train_config.alpha = synth_config.alpha;
        synth_config.seed = train_cmd->parsed() ? train_config.seed : synth_config.seed;

        if (ingest_cmd->parsed()) return cmd_ingest(common);
        if (stats_cmd->parsed()) return cmd_stats(common);
        if (fixture_cmd->parsed()) return cmd_fixture(common, fixture_config);
        if (synth_cmd->parsed()) return cmd_synth(common, domain, synth_config);
        if (train_cmd->parsed()) return cmd_train(common, domain, synth_config, train_config);
        if (embed_cmd->parsed()) return cmd_embed(common, checkpoint_path, what, setting_name, split_name);
        if (retrieve_cmd->parsed()) {
            return cmd_retrieve(common, checkpoint_path, store_path, proposal_store_path, setting_name,
                                split_name);
        }
        if (eval_cmd->parsed()) return cmd_eval(common, checkpoint_path, rankings_path, setting_name, k_list);
        if (elbow_cmd->parsed()) return cmd_elbow(common, checkpoint_path, setting_name, k_max);
        if (rerank_cmd->parsed()) return cmd_rerank(common, rerank_args);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace mir
