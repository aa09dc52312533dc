#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tokenforest/io.hpp"
#include "tokenforest/metrics.hpp"
#include "tokenforest/pruner.hpp"
#include "tokenforest/synthgen.hpp"
#include "tokenforest/threading.hpp"

namespace tf = tokenforest;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct PruneFlags {
    tf::PruneConfig config;
    std::string selector_name = "random";
};

void add_prune_flags(CLI::App* cmd, PruneFlags& flags) {
    cmd->add_option("--ratio", flags.config.budget_ratio,
                    "fraction of tokens to remove")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.999999999));
    cmd->add_option("--tau-s", flags.config.tau_s, "semantic similarity threshold")
        ->capture_default_str()
        ->check(CLI::Range(-1.0, 1.0));
    cmd->add_option("--tau-p", flags.config.tau_p, "spatial distance threshold")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.4142135623730951));
    cmd->add_option("--lambda", flags.config.lambda,
                    "ranking trade-off between similarity and spatial distance "
                    "(heuristic default, not tuned)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--keep-ratio", flags.config.keep_ratio,
                    "per-frame candidate node fraction")
        ->capture_default_str()
        ->check(CLI::Range(1e-9, 1.0));
    cmd->add_option("--selector", flags.selector_name,
                    "candidate selector: random, norm_saliency or all")
        ->capture_default_str()
        ->check(CLI::IsMember({"random", "norm_saliency", "all"}));
    cmd->add_option("--seed", flags.config.seed, "random seed")->capture_default_str();
}

std::string stem_of(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

tf::MetricsRow evaluate_result(const tf::VideoTokens& video, const tf::PruneResult& result,
                               const std::string& spec_id, const std::string& method,
                               double ratio, std::uint64_t seed, double runtime_ms) {
    tf::MetricsRow row;
    row.spec_id = spec_id;
    row.method = method;
    row.ratio = ratio;
    row.seed = seed;
    row.k = static_cast<std::int64_t>(result.retained.size());
    row.redundancy = result.retained.size() >= 2
                         ? tf::redundancy_score(video, result.retained)
                         : std::numeric_limits<double>::quiet_NaN();
    row.coverage = tf::frame_coverage(result, video.frames);
    row.runtime_ms = runtime_ms;
    return row;
}

int run_gen(const std::string& spec_path, const std::string& out_path, std::uint64_t seed) {
    const tf::SceneSpec spec = tf::load_scene_spec(spec_path);
    const tf::VideoTokens video = tf::gen_video(spec, seed);
    tf::write_vtok(video, out_path);
    std::cout << "wrote " << out_path << ": T=" << video.frames
              << " N=" << video.tokens_per_frame << " d=" << video.dim << "\n";
    return kExitOk;
}

int run_prune(const std::string& in_path, const std::string& out_path, const PruneFlags& flags,
              const std::string& trace_path, const std::string& forest_path,
              const std::string& dot_path) {
    tf::PruneConfig config = flags.config;
    config.selector = tf::selector_from_string(flags.selector_name);
    config.validate();

    const tf::VideoTokens video = tf::read_vtok(in_path);
    const tf::PruneOutcome outcome = tf::prune_video(video, config);

    tf::write_result_json({outcome.result, config, "forest"}, out_path);
    if (!trace_path.empty()) tf::write_trace_csv(outcome.trace, trace_path);
    if (!forest_path.empty()) tf::export_forest_json({outcome.forest, config}, forest_path);
    if (!dot_path.empty()) tf::export_forest_dot(outcome.forest, outcome.nodes, dot_path);

    std::cout << "retained " << outcome.result.retained.size() << " of "
              << video.total_tokens() << " tokens (budget " << outcome.budget << ")\n";
    return kExitOk;
}

int run_eval(const std::string& in_path, const std::string& result_path,
             const std::string& out_path, const std::string& per_frame_path, bool timings) {
    const tf::VideoTokens video = tf::read_vtok(in_path);
    const tf::ResultDoc doc = tf::read_result_json(result_path);

    const auto start = std::chrono::steady_clock::now();
    tf::MetricsRow row =
        evaluate_result(video, doc.result, stem_of(in_path), doc.method,
                        doc.config.budget_ratio, doc.config.seed, 0.0);
    if (timings) row.runtime_ms = elapsed_ms(start);

    std::string csv = tf::metrics_csv_header() + "\n" + tf::metrics_csv_row(row) + "\n";
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw tf::DataError(tf::DataError::Kind::Io, "cannot write '" + out_path + "'");
    out << csv;

    if (!per_frame_path.empty()) {
        std::ofstream pf(per_frame_path, std::ios::trunc);
        if (!pf) {
            throw tf::DataError(tf::DataError::Kind::Io, "cannot write '" + per_frame_path + "'");
        }
        pf << tf::per_frame_csv_header() << "\n"
           << tf::per_frame_csv_rows(stem_of(in_path), doc.method, doc.config.budget_ratio,
                                     doc.config.seed,
                                     tf::per_frame_counts(doc.result, video.frames));
    }
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int run_compare(const std::string& in_path, const std::string& out_path,
                const PruneFlags& flags, const std::string& methods_csv,
                const std::string& seeds_csv, const std::string& per_frame_path, bool timings) {
    tf::PruneConfig base_config = flags.config;
    base_config.selector = tf::selector_from_string(flags.selector_name);
    base_config.validate();

    const tf::VideoTokens video = tf::read_vtok(in_path);
    const std::string spec_id = stem_of(in_path);
    const std::int64_t budget =
        tf::compute_budget(base_config.budget_ratio, video.frames, video.tokens_per_frame);

    const std::vector<std::string> methods = split_list(methods_csv);
    if (methods.empty()) throw CLI::ValidationError("--methods", "needs at least one method");
    std::vector<std::uint64_t> seeds;
    for (const std::string& s : split_list(seeds_csv)) seeds.push_back(std::stoull(s));
    if (seeds.empty()) throw CLI::ValidationError("--seeds", "needs at least one seed");

    std::string csv = tf::metrics_csv_header() + "\n";
    std::string per_frame_csv = tf::per_frame_csv_header() + "\n";

    for (const std::string& method : methods) {
        for (std::uint64_t seed : seeds) {
            tf::PruneConfig config = base_config;
            config.seed = seed;
            const auto start = std::chrono::steady_clock::now();
            tf::PruneResult result;
            if (method == "forest") {
                result = tf::prune_video(video, config).result;
            } else {
                result = tf::baseline_prune(video, budget, tf::baseline_from_string(method), seed);
            }
            const double ms = timings ? elapsed_ms(start) : 0.0;
            csv += tf::metrics_csv_row(evaluate_result(video, result, spec_id, method,
                                                       config.budget_ratio, seed, ms)) +
                   "\n";
            per_frame_csv += tf::per_frame_csv_rows(spec_id, method, config.budget_ratio, seed,
                                                    result.per_frame_counts);
        }
    }

    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw tf::DataError(tf::DataError::Kind::Io, "cannot write '" + out_path + "'");
    out << csv;
    if (!per_frame_path.empty()) {
        std::ofstream pf(per_frame_path, std::ios::trunc);
        if (!pf) {
            throw tf::DataError(tf::DataError::Kind::Io, "cannot write '" + per_frame_path + "'");
        }
        pf << per_frame_csv;
    }
    std::cout << "wrote " << out_path << " (" << methods.size() * seeds.size() << " rows)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tokenforest: spatial-temporal forest compression for video token streams"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads for matrix construction (0 = auto)")
        ->capture_default_str();

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic token stream from a scene spec");
    std::string gen_spec;
    std::string gen_out;
    std::uint64_t gen_seed = 0;
    gen->add_option("--spec", gen_spec, "scene spec JSON file")->required();
    gen->add_option("--out", gen_out, "output VTOK path")->required();
    gen->add_option("--seed", gen_seed, "random seed")->capture_default_str();

    // prune
    auto* prune = app.add_subcommand("prune", "prune a token stream with forest modeling");
    std::string prune_in;
    std::string prune_out;
    std::string prune_trace;
    std::string prune_forest;
    std::string prune_dot;
    PruneFlags prune_flags;
    prune->add_option("--in", prune_in, "input VTOK path")->required();
    prune->add_option("--out", prune_out, "output result JSON path")->required();
    add_prune_flags(prune, prune_flags);
    prune->add_option("--trace", prune_trace, "write the removal trace CSV here");
    prune->add_option("--export-forest", prune_forest, "write the forest JSON here");
    prune->add_option("--export-dot", prune_dot, "write a graphviz view of the forest here");

    // eval
    auto* eval = app.add_subcommand("eval", "compute metrics for a pruning result");
    std::string eval_in;
    std::string eval_result;
    std::string eval_out;
    std::string eval_per_frame;
    bool eval_timings = false;
    eval->add_option("--in", eval_in, "input VTOK path")->required();
    eval->add_option("--result", eval_result, "result JSON path")->required();
    eval->add_option("--out", eval_out, "output metrics CSV path")->required();
    eval->add_option("--per-frame-out", eval_per_frame, "write per-frame retained counts here");
    eval->add_flag("--timings", eval_timings,
                   "record wall-clock runtimes (off by default, keeps outputs reproducible)");

    // compare
    auto* compare = app.add_subcommand("compare", "run a method/seed grid and collect metrics");
    std::string cmp_in;
    std::string cmp_out;
    std::string cmp_methods = "forest,random,per_frame_topk,global_topk";
    std::string cmp_seeds = "0";
    std::string cmp_per_frame;
    bool cmp_timings = false;
    PruneFlags cmp_flags;
    compare->add_option("--in", cmp_in, "input VTOK path")->required();
    compare->add_option("--out", cmp_out, "output metrics CSV path")->required();
    compare->add_option("--methods", cmp_methods,
                        "comma list of forest, random, per_frame_topk, global_topk")
        ->capture_default_str();
    compare->add_option("--seeds", cmp_seeds, "comma list of seeds")->capture_default_str();
    add_prune_flags(compare, cmp_flags);
    compare->add_option("--per-frame-out", cmp_per_frame,
                        "write per-frame retained counts here");
    compare->add_flag("--timings", cmp_timings,
                      "record wall-clock runtimes (off by default, keeps outputs reproducible)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (threads > 0) tf::set_max_threads(threads);

    try {
        if (gen->parsed()) return run_gen(gen_spec, gen_out, gen_seed);
        if (prune->parsed()) {
            return run_prune(prune_in, prune_out, prune_flags, prune_trace, prune_forest,
                             prune_dot);
        }
        if (eval->parsed()) {
            return run_eval(eval_in, eval_result, eval_out, eval_per_frame, eval_timings);
        }
        if (compare->parsed()) {
            return run_compare(cmp_in, cmp_out, cmp_flags, cmp_methods, cmp_seeds, cmp_per_frame,
                               cmp_timings);
        }
    } catch (const tf::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
