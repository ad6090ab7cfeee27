// mpr: command-line front end. Exit codes: 0 ok, 2 input error, 3 runtime failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpr/ablation.hpp"
#include "mpr/dataset.hpp"
#include "mpr/error.hpp"
#include "mpr/eval.hpp"
#include "mpr/hints.hpp"
#include "mpr/model.hpp"
#include "mpr/pipeline.hpp"
#include "mpr/training.hpp"

namespace fs = std::filesystem;
using namespace mpr;

namespace {

constexpr int kInputError = 2;
constexpr int kRuntimeError = 3;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RuntimeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runs `f`, re-labelling library errors as input errors.
template <typename F>
auto as_input(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const InputError&) {
        throw;
    } catch (const std::exception& e) {
        throw InputError(e.what());
    }
}

template <typename F>
auto as_runtime(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw RuntimeFailure(e.what());
    }
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "key = value config file");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
}

RunConfig resolve(const Common& c) {
    return as_input([&] {
        RunConfig cfg = c.config.empty() ? RunConfig{} : read_run_config_file(c.config);
        for (const auto& kv : c.overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + kv + "'");
            set_run_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (c.seed) cfg.train.seed = *c.seed;
        if (!c.out.empty()) cfg.out_dir = c.out;
        cfg.validate();
        return cfg;
    });
}

fs::path prepare_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create " + dir + ": " + ec.message());
    return fs::path(dir);
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw InputError("cannot write " + p.string());
    return out;
}

void echo_config(const fs::path& dir, const RunConfig& cfg) {
    auto out = open_out(dir / "config.resolved");
    write_run_config(out, cfg);
}

std::string checkpoint_path(const RunConfig& cfg) {
    return cfg.checkpoint_path.empty() ? (fs::path(cfg.out_dir) / "model.ckpt").string() : cfg.checkpoint_path;
}

PreparedData load_data(const RunConfig& cfg) {
    if (cfg.bundle_dir.empty()) throw InputError("no bundle given (set bundle = DIR)");
    return as_input([&] { return load_bundle(cfg.bundle_dir, cfg); });
}

ModelParams load_model(const RunConfig& cfg, const PreparedData& data) {
    const std::string path = checkpoint_path(cfg);
    if (!fs::exists(path)) throw InputError("checkpoint " + path + " not found");
    return as_input([&] {
        ModelParams p = load_checkpoint(path);
        const ModelDims expected = make_dims(data.training, cfg.train);
        if (p.dims.users != expected.users || p.dims.pois != expected.pois || p.dims.features != expected.features) {
            throw Error(ErrorKind::VersionMismatch, path + ": checkpoint shape does not match the bundle");
        }
        return p;
    });
}

std::size_t level_index(const PreparedData& data, int level) {
    if (level < 1 || level > data.tree.levels()) {
        throw InputError("level " + std::to_string(level) + " out of range 1.." + std::to_string(data.tree.levels()));
    }
    return static_cast<std::size_t>(level - 1);
}

// ---------------------------------------------------------------------------

int cmd_synth(const Common& c) {
    const SynthConfig sc = as_input([&] { return c.config.empty() ? SynthConfig{} : read_synth_config_file(c.config); });
    const std::uint64_t seed = c.seed.value_or(7);
    const fs::path dir = prepare_out(c.out.empty() ? "synth" : c.out);
    const SyntheticData data = as_input([&] { return generate_synthetic(sc, seed); });
    {
        auto out = open_out(dir / "pois.jsonl");
        write_poi_profiles(out, data.pois);
    }
    {
        auto out = open_out(dir / "checkins.csv");
        write_interactions(out, data.checkins);
    }
    {
        auto out = open_out(dir / "searches.csv");
        write_interactions(out, data.searches);
    }
    {
        auto out = open_out(dir / "users.jsonl");
        write_user_profiles(out, data.users);
    }
    {
        auto out = open_out(dir / "synth.cfg");
        out << "# seed = " << seed << '\n';
        write_synth_config(out, sc);
    }
    {
        // Ready-made run config pointing at the generated files.
        RunConfig rc;
        rc.pois_path = (dir / "pois.jsonl").string();
        rc.checkins_path = (dir / "checkins.csv").string();
        rc.searches_path = (dir / "searches.csv").string();
        rc.users_path = (dir / "users.jsonl").string();
        rc.bundle_dir = (dir / "bundle").string();
        rc.out_dir = (dir / "run").string();
        rc.train.seed = seed;
        rc.train.lambda_reg = kSyntheticLambdaReg;
        auto out = open_out(dir / "run.cfg");
        write_run_config(out, rc);
    }
    std::cout << "seed " << seed << ": " << data.pois.size() << " POIs, " << data.users.size() << " users, "
              << data.checkins.size() << " check-ins, " << data.searches.size() << " searches -> " << dir.string()
              << '\n';
    return 0;
}

int cmd_ingest(const Common& c) {
    RunConfig cfg = resolve(c);
    const fs::path dir = prepare_out(cfg.out_dir);
    echo_config(dir, cfg);
    const PreparedData data = as_input([&] {
        for (const auto& p : {cfg.pois_path, cfg.checkins_path, cfg.searches_path, cfg.users_path}) {
            if (p.empty()) throw InputError("pois, checkins, searches and users paths are required");
            if (!fs::exists(p)) throw InputError("input file " + p + " not found");
        }
        const PoiTree tree = build_tree(read_poi_profiles_file(cfg.pois_path));
        const IngestResult raw = ingest(cfg.checkins_path, cfg.searches_path, cfg.users_path, tree);
        std::cout << "read " << raw.checkins.size() << " check-ins (" << raw.skipped_checkins << " skipped), "
                  << raw.searches.size() << " searches (" << raw.skipped_searches << " skipped), "
                  << raw.users.size() << " user profiles\n";
        return prepare_dataset(tree, raw.checkins, raw.searches, raw.users, cfg);
    });
    const std::string bundle = cfg.bundle_dir.empty() ? dir.string() : cfg.bundle_dir;
    as_input([&] { write_bundle(data, bundle); });
    std::cout << "users " << data.users.size() << ", features " << data.features.f() << '\n';
    for (std::size_t l = 0; l < data.split.levels.size(); ++l) {
        const auto& s = data.split.levels[l];
        std::cout << "level " << l + 1 << ": " << data.poi_ids(l).size() << " POIs, train " << s.train.size()
                  << ", validation " << s.validation.size() << ", test " << s.test.size() << '\n';
    }
    std::cout << "bundle written to " << bundle << '\n';
    return 0;
}

int cmd_train(const Common& c, std::optional<double> gamma, std::optional<std::size_t> epochs) {
    RunConfig cfg = resolve(c);
    if (gamma) cfg.train.gamma = *gamma;
    if (epochs) cfg.train.epochs = *epochs;
    const fs::path dir = prepare_out(cfg.out_dir);
    echo_config(dir, cfg);
    const PreparedData data = load_data(cfg);
    const TrainResult result = as_runtime([&] { return train(data.training, data.validation, cfg.train); });
    const std::string ckpt = checkpoint_path(cfg);
    save_checkpoint(result.params, ckpt);
    {
        auto out = open_out(dir / "history.csv");
        write_history_csv(out, result.history, cfg.train.eval_k);
    }
    for (const auto& r : result.history) {
        std::cout << "epoch " << r.epoch << " loss " << r.total_loss << " val P@" << cfg.train.eval_k << ' '
                  << r.val_precision << " NDCG@" << cfg.train.eval_k << ' ' << r.val_ndcg << '\n';
    }
    std::cout << "best epoch " << result.best_epoch << ", checkpoint " << ckpt << '\n';
    return 0;
}

int cmd_recommend(const Common& c, const std::string& user, int level, std::size_t k) {
    RunConfig cfg = resolve(c);
    const PreparedData data = load_data(cfg);
    const ModelParams params = load_model(cfg, data);
    const std::size_t l = level_index(data, level);
    const std::size_t u = as_input([&] { return data.user_row(user); });
    const Scorer scorer(params, data.training.links, data.training.graphs, data.training.history);
    const auto recs = scorer.recommend_topk(u, l, k, data.training.train[l][u], data.poi_ids(l));
    std::ostringstream csv;
    csv.precision(12);
    csv << "rank,poi_id,score\n";
    for (std::size_t i = 0; i < recs.size(); ++i) csv << i + 1 << ',' << recs[i].poi_id << ',' << recs[i].score << '\n';
    std::cout << csv.str();
    if (!c.out.empty()) {
        const fs::path dir = prepare_out(cfg.out_dir);
        echo_config(dir, cfg);
        open_out(dir / "recommendations.csv") << csv.str();
    }
    return 0;
}

int cmd_hints(const Common& c, const std::string& user, const std::string& poi, int level,
              std::optional<std::size_t> k, std::optional<double> threshold) {
    RunConfig cfg = resolve(c);
    if (k) cfg.hint_k = *k;
    if (threshold) cfg.hint_threshold = *threshold;
    const fs::path dir = prepare_out(cfg.out_dir);
    echo_config(dir, cfg);
    const PreparedData data = load_data(cfg);
    const ModelParams params = load_model(cfg, data);
    const std::size_t l = level_index(data, level);
    const std::size_t u = as_input([&] { return data.user_row(user); });
    const std::size_t p = as_input([&] { return data.poi_row(poi, l); });
    const Scorer scorer(params, data.training.links, data.training.graphs, data.training.history);
    const auto names = data.features.feature_names();

    nlohmann::json report;
    report["user"] = user;
    report["poi"] = poi;
    report["level"] = level;

    const UserAspect ua = as_input([&] { return user_aspect(params, u, p, l, cfg.hint_k); });
    nlohmann::json uj;
    for (std::size_t i = 0; i < ua.features.size(); ++i) {
        uj["top_features"].push_back({{"column", ua.features[i]}, {"name", names.at(ua.features[i])},
                                      {"value", ua.user_values[i]}});
    }
    uj["hint_feature"] = {{"column", ua.hint_feature}, {"name", names.at(ua.hint_feature)}, {"value", ua.hint_value}};
    report["user_aspect"] = uj;

    nlohmann::json pj;
    const auto& kids = data.training.links.children.at(l);
    if (params.dims.has_inter_level(l) && !kids.at(p).empty()) {
        const PoiAspect pa = poi_aspect(params, data.training.links, u, p, l);
        const auto& child_ids = data.poi_ids(l + 1);
        pj["applicable"] = true;
        for (std::size_t i = 0; i < pa.children.size(); ++i) {
            pj["children"].push_back({{"poi", child_ids.at(pa.children[i])},
                                      {"ratio", pa.ratios[i]},
                                      {"softmax", pa.softmax[i]},
                                      {"dot", pa.dots[i]}});
        }
        pj["hot"] = child_ids.at(pa.children[pa.hot]);
        pj["negative_dots"] = pa.negative;
        pj["degenerate"] = pa.degenerate;
    } else {
        pj["applicable"] = false;
        pj["reason"] = params.dims.is_leaf(l) ? "leaf POI" : (kids.at(p).empty() ? "no children" : "propagation off");
    }
    report["poi_aspect"] = pj;

    nlohmann::json ij;
    try {
        const InteractionAspect ia = interaction_aspect(scorer, u, p, l, cfg.hint_threshold);
        ij = {{"eta", ia.eta}, {"threshold", cfg.hint_threshold}, {"important", ia.important}};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::ZeroTotalScore) throw;
        ij = {{"eta", nullptr}, {"error", "total score is zero"}};
    }
    ij["O_F"] = scorer.feature_score(u, p, l);
    ij["O_H"] = scorer.historical_score(u, p, l);
    ij["gamma"] = params.dims.gamma;
    report["interaction_aspect"] = ij;

    open_out(dir / "hints.json") << report.dump(2) << '\n';

    // Heat maps: this user plus the next few users, top recommendations.
    std::vector<std::size_t> users;
    for (std::size_t i = 0; i < std::min<std::size_t>(10, data.users.size()); ++i) {
        users.push_back((u + i) % data.users.size());
    }
    std::vector<std::string> user_labels;
    for (auto r : users) user_labels.push_back(data.users[r].id);
    {
        auto out = open_out(dir / "heatmap_user_features.csv");
        write_heatmap_csv(out, user_feature_heatmap(params, users), user_labels, names);
    }
    if (pj["applicable"].get<bool>()) {
        std::vector<std::string> labels;
        for (auto ch : kids[p]) labels.push_back(data.poi_ids(l + 1).at(ch));
        auto out = open_out(dir / "heatmap_child_contribution.csv");
        write_heatmap_csv(out, child_contribution_heatmap(params, data.training.links, users, p, l), user_labels,
                          labels);
    }
    {
        std::vector<std::size_t> pois;
        for (const auto& r : scorer.recommend_topk(u, l, 10, data.training.train[l][u], data.poi_ids(l))) {
            pois.push_back(r.row);
        }
        std::vector<std::string> labels;
        for (auto r : pois) labels.push_back(data.poi_ids(l).at(r));
        auto out = open_out(dir / "heatmap_interaction.csv");
        write_heatmap_csv(out, interaction_heatmap(scorer, users, pois, l), user_labels, labels);
    }
    std::cout << report.dump(2) << '\n';
    return 0;
}

int cmd_evaluate(const Common& c) {
    RunConfig cfg = resolve(c);
    const fs::path dir = prepare_out(cfg.out_dir);
    echo_config(dir, cfg);
    const PreparedData data = load_data(cfg);
    const ModelParams params = load_model(cfg, data);
    const MetricTable table = as_runtime([&] { return evaluate(params, data.training, data.test, cfg.ks); });
    std::ostringstream csv;
    write_metric_csv(csv, {{"MPR", table}});
    open_out(dir / "metrics.csv") << csv.str();
    std::cout << csv.str();
    for (std::size_t l = 0; l < table.levels.size(); ++l) {
        std::cout << "# level " << l + 1 << ": " << table.levels[l].users_evaluated << " users ("
                  << table.levels[l].cold_start_users << " cold start)\n";
    }
    return 0;
}

int cmd_ablate(const Common& c) {
    RunConfig cfg = resolve(c);
    const fs::path dir = prepare_out(cfg.out_dir);
    echo_config(dir, cfg);
    const PreparedData data = load_data(cfg);
    std::vector<std::uint64_t> seeds(cfg.ablation_seeds);
    std::iota(seeds.begin(), seeds.end(), cfg.train.seed);
    const AblationResult result =
        as_runtime([&] { return ablation(data.training, data.validation, data.test, cfg.train, seeds, cfg.ks); });
    {
        std::vector<std::pair<std::string, MetricTable>> tables;
        for (const auto& r : result.runs) {
            tables.emplace_back(std::string(variant_name(r.variant)) + "_seed" + std::to_string(r.seed), r.metrics);
        }
        auto out = open_out(dir / "ablation_runs.csv");
        write_metric_csv(out, tables);
    }
    std::ostringstream summary;
    write_ablation_summary(summary, result, data.split.levels.size(), cfg.ks);
    open_out(dir / "ablation_summary.csv") << summary.str();
    std::cout << summary.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-level POI recommendation"};
    app.require_subcommand(1);

    Common synth_c, ingest_c, train_c, rec_c, hints_c, eval_c, ablate_c;
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset (--config takes a synth config)");
    add_common(synth, synth_c);
    auto* ingest_cmd = app.add_subcommand("ingest", "filter, split and featurise raw data into a bundle");
    add_common(ingest_cmd, ingest_c);

    auto* train_cmd = app.add_subcommand("train", "train on a bundle, write checkpoint and history");
    add_common(train_cmd, train_c);
    std::optional<double> gamma;
    std::optional<std::size_t> epochs;
    train_cmd->add_option("--gamma", gamma, "geospatial weight; 0 trains the M2 variant");
    train_cmd->add_option("--epochs", epochs, "epoch count");

    auto* rec = app.add_subcommand("recommend", "print top-k POIs for a user");
    add_common(rec, rec_c);
    std::string rec_user;
    int rec_level = 1;
    std::size_t rec_k = 10;
    rec->add_option("--user", rec_user, "user id")->required();
    rec->add_option("--level", rec_level, "tree level, 1 = top")->required();
    rec->add_option("--k", rec_k, "list length")->check(CLI::PositiveNumber);

    auto* hints = app.add_subcommand("hints", "user, POI and interaction hints for one recommendation");
    add_common(hints, hints_c);
    std::string hint_user, hint_poi;
    int hint_level = 1;
    std::optional<std::size_t> hint_k;
    std::optional<double> hint_threshold;
    hints->add_option("--user", hint_user, "user id")->required();
    hints->add_option("--poi", hint_poi, "POI id")->required();
    hints->add_option("--level", hint_level, "tree level, 1 = top")->required();
    hints->add_option("--K", hint_k, "user-aspect feature count");
    hints->add_option("--threshold", hint_threshold, "interaction-aspect threshold");

    auto* eval_cmd = app.add_subcommand("evaluate", "test-split P@k and NDCG@k of a checkpoint");
    add_common(eval_cmd, eval_c);
    auto* ablate = app.add_subcommand("ablate", "train and evaluate M1, M2 and M3 over several seeds");
    add_common(ablate, ablate_c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kInputError;
    }

    try {
        if (*synth) return cmd_synth(synth_c);
        if (*ingest_cmd) return cmd_ingest(ingest_c);
        if (*train_cmd) return cmd_train(train_c, gamma, epochs);
        if (*rec) return cmd_recommend(rec_c, rec_user, rec_level, rec_k);
        if (*hints) return cmd_hints(hints_c, hint_user, hint_poi, hint_level, hint_k, hint_threshold);
        if (*eval_cmd) return cmd_evaluate(eval_c);
        if (*ablate) return cmd_ablate(ablate_c);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const RuntimeFailure& e) {
        std::cerr << "failed: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kInputError;
}
