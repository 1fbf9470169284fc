// Command-line entry point: dataset generation, FNO training, representor
// precomputation, HMM solves, error evaluation, theory checks, and kernel
// benchmarks. Every subcommand reads an optional JSON config plus
// dotted-path overrides and writes a manifest into its run directory.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rws/dataset.hpp"
#include "rws/fno.hpp"
#include "rws/metrics.hpp"
#include "rws/scenario.hpp"
#include "rws/stokes_bie.hpp"

using json = nlohmann::json;
using namespace rws;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

double elapsed(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

json default_config() {
    return json{
        {"scenario",
         {{"eps", 0.04},
          {"mean", 2.0},
          {"amp", -1.0},
          {"phase", 0.0},
          {"y0_over_eps", 3.0},
          {"L_per", 2.0},
          {"y_top", 1.0},
          {"g1_const", 2.0},
          {"g1_sin", 1.0}}},
        {"hmm",
         {{"N_micro", 5},
          {"J", 1024},
          {"backend", "bie"},
          {"model", ""},
          {"tol", 1e-8},
          {"max_iter", 50},
          {"Nx", 41},
          {"Ny", 29},
          {"nq", 64},
          {"solve_tol", 1e-12}}},
        {"dataset",
         {{"K", 200},
          {"J", 128},
          {"seed", 7},
          {"width", 1.0},
          {"corner_radius", 0.1},
          {"height_min", 0.5},
          {"height_max", 1.0},
          {"line_min", 0.15},
          {"line_max", 0.35},
          {"variance", 0.002},
          {"corr_len", 0.25},
          {"gp_points", 64},
          {"solve_tol", 1e-10},
          {"train_frac", 0.9}}},
        {"train",
         {{"epochs", 200},
          {"batch", 32},
          {"lr", 1e-3},
          {"seed", 0},
          {"modes", 16},
          {"width", 32},
          {"blocks", 4}}},
        {"reference", {{"nx", 800}, {"ny", 128}}},
        {"eval", {{"offsets_over_eps", json::array({2.0, 4.0, 8.0})}, {"n_samples", 400}}},
        {"theory",
         {{"trials", 1000000},
          {"delta1", 0.01},
          {"delta2", 0.01},
          {"C", 1.0},
          {"a1", 1.3},
          {"a2", 0.7},
          {"seed", 1}}},
    };
}

// Apply "a.b.c=value" onto the config; the value is parsed as JSON when
// possible and kept as a string otherwise.
void apply_override(json& cfg, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
        throw CLI::ValidationError("--set expects key.path=value, got: " + kv);
    std::string path = kv.substr(0, eq), val = kv.substr(eq + 1);
    json* node = &cfg;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw CLI::ValidationError("--set: empty key path");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    json parsed = json::parse(val, nullptr, false);
    (*node)[parts.back()] = parsed.is_discarded() ? json(val) : parsed;
}

std::string git_hash() {
    FILE* p = popen("git rev-parse HEAD 2>/dev/null", "r");
    if (!p) return "unknown";
    char buf[64] = {};
    std::string out;
    if (fgets(buf, sizeof buf, p)) out = buf;
    pclose(p);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

void write_manifest(const std::string& dir, const std::string& command, const json& cfg) {
    fs::create_directories(dir);
    json m{{"command", command}, {"config", cfg}, {"git", git_hash()}};
    std::ofstream f(dir + "/run_manifest.json");
    f << m.dump(2) << "\n";
}

SineChannelScenario scenario_from(const json& cfg) {
    const json& s = cfg.at("scenario");
    SineChannelScenario sc;
    sc.eps = s.at("eps");
    sc.mean = s.at("mean");
    sc.amp = s.at("amp");
    sc.phase = s.at("phase");
    sc.y0_over_eps = s.at("y0_over_eps");
    sc.L_per = s.at("L_per");
    sc.y_top = s.at("y_top");
    sc.g1_const = s.at("g1_const");
    sc.g1_sin = s.at("g1_sin");
    return sc;
}

HmmConfig hmm_from(const json& cfg, const SineChannelScenario& sc, TrainState& model_slot) {
    const json& h = cfg.at("hmm");
    HmmConfig hc = sc.hmm(h.at("N_micro"), h.at("J"));
    hc.backend = h.at("backend");
    hc.tol = h.at("tol");
    hc.max_iter = h.at("max_iter");
    hc.Nx = h.at("Nx");
    hc.Ny = h.at("Ny");
    hc.nq = h.at("nq");
    hc.solve_tol = h.at("solve_tol");
    const std::string model_path = h.at("model");
    if (hc.backend == "fno") {
        if (model_path.empty())
            throw CLI::ValidationError("hmm.backend=fno requires hmm.model");
        model_slot = load_model(model_path);
        hc.model = &model_slot;
    }
    return hc;
}

DatasetConfig dataset_from(const json& cfg) {
    const json& d = cfg.at("dataset");
    DatasetConfig dc;
    dc.J = d.at("J");
    dc.width = d.at("width");
    dc.corner_radius = d.at("corner_radius");
    dc.height_min = d.at("height_min");
    dc.height_max = d.at("height_max");
    dc.line_min = d.at("line_min");
    dc.line_max = d.at("line_max");
    dc.gp.variance = d.at("variance");
    dc.gp.corr_len = d.at("corr_len");
    dc.gp.n_points = d.at("gp_points");
    dc.solve_tol = d.at("solve_tol");
    return dc;
}

int cmd_gen_data(const json& cfg, const std::string& out) {
    DatasetConfig dc = dataset_from(cfg);
    const int K = cfg.at("dataset").at("K");
    const std::uint64_t seed = cfg.at("dataset").at("seed");
    const double frac = cfg.at("dataset").at("train_frac");
    write_manifest(out, "gen-data", cfg);
    auto t0 = clk::now();
    DatasetManifest m = generate_dataset(dc, K, seed, out, frac);
    std::printf("gen-data: K=%d J=%d skipped=%d crc=%016llx time=%.1fs\n", m.K, m.J,
                m.skipped, static_cast<unsigned long long>(m.crc), elapsed(t0));
    return 0;
}

int cmd_train(const json& cfg, const std::string& data, const std::string& out) {
    auto [samples, manifest] = load_dataset(data);
    const json& t = cfg.at("train");
    FnoConfig fc;
    fc.K_max = t.at("modes");
    fc.d = t.at("width");
    fc.L = t.at("blocks");
    TrainConfig tc;
    tc.epochs = t.at("epochs");
    tc.batch = t.at("batch");
    tc.lr = t.at("lr");
    tc.seed = t.at("seed");
    tc.verbose = true;
    write_manifest(fs::path(out).parent_path().empty()
                       ? "."
                       : fs::path(out).parent_path().string(),
                   "train", cfg);
    auto t0 = clk::now();
    TrainState st = train_fno(samples, manifest, fc, tc);
    save_model(st, out);
    std::printf("train: epochs=%d final train=%.4e test=%.4e time=%.1fs model=%s\n",
                tc.epochs, st.train_loss.back(), st.test_loss.back(), elapsed(t0),
                out.c_str());
    return 0;
}

int cmd_precompute(const json& cfg, const std::string& out) {
    SineChannelScenario sc = scenario_from(cfg);
    TrainState model;
    HmmConfig hc = hmm_from(cfg, sc, model);
    write_manifest(out, "precompute", cfg);
    auto t0 = clk::now();
    auto sites = precompute_representors(hc);
    const double dt = elapsed(t0);
    std::ofstream f(out + "/representors.jsonl");
    for (const auto& s : sites) {
        const Curve& c = s.md.curve;
        json rec{{"x", s.x},
                 {"r1_norm", std::sqrt(inner_w(c, s.pair.r1, s.pair.r1))},
                 {"r2_norm", std::sqrt(inner_w(c, s.pair.r2, s.pair.r2))}};
        f << rec.dump() << "\n";
    }
    std::printf("precompute: backend=%s sites=%zu J=%d time=%.2fs\n", hc.backend.c_str(),
                sites.size(), hc.J, dt);
    return 0;
}

int cmd_hmm_solve(const json& cfg, const std::string& out) {
    SineChannelScenario sc = scenario_from(cfg);
    TrainState model;
    HmmConfig hc = hmm_from(cfg, sc, model);
    write_manifest(out, "hmm-solve", cfg);
    auto t0 = clk::now();
    auto sites = precompute_representors(hc);
    const double t_pre = elapsed(t0);
    t0 = clk::now();
    HmmResult res = run_hmm(hc, sites);
    const double t_iter = elapsed(t0);
    std::ofstream f(out + "/history.jsonl");
    for (std::size_t it = 0; it < res.history.size(); ++it) {
        json rec{{"iter", it}, {"alpha", res.history[it]}};
        f << rec.dump() << "\n";
    }
    std::printf("hmm-solve: backend=%s converged=%d iters=%d precompute=%.2fs "
                "iterate=%.2fs\n",
                hc.backend.c_str(), res.converged ? 1 : 0, res.iterations, t_pre, t_iter);
    for (std::size_t s = 0; s < res.alpha.size(); ++s)
        std::printf("  site x=%.4f alpha=%.6e\n", res.site_x[s], res.alpha[s]);
    return 0;
}

int cmd_eval(const json& cfg, const std::string& model_path, const std::string& out) {
    SineChannelScenario sc = scenario_from(cfg);
    TrainState model;
    json cfg_bie = cfg;
    cfg_bie["hmm"]["backend"] = "bie";
    HmmConfig hc = hmm_from(cfg_bie, sc, model);
    write_manifest(out, "eval", cfg);

    auto sites = precompute_representors(hc);
    HmmResult bie = run_hmm(hc, sites);
    std::printf("eval: bie-hmm converged in %d iterations\n", bie.iterations);

    bool have_fno = !model_path.empty();
    HmmResult fno;
    if (have_fno) {
        model = load_model(model_path);
        HmmConfig hf = hc;
        hf.backend = "fno";
        hf.model = &model;
        auto fsites = precompute_representors(hf);
        fno = run_hmm(hf, fsites);
        std::printf("eval: fno-hmm converged in %d iterations\n", fno.iterations);
    }

    SlipFunction s0 = SlipFunction::constant(1e-6, sc.L_per);
    SpectralField u0 = solve_macro(s0, sc.g_top(), hc.geom, hc.Nx, hc.Ny);

    const int nx = cfg.at("reference").at("nx"), ny = cfg.at("reference").at("ny");
    auto t0 = clk::now();
    ReferenceField ref = solve_reference(sc.reference(), nx, ny);
    std::printf("eval: reference %dx%d solved in %.1fs\n", nx, ny, elapsed(t0));

    SolutionBundle b;
    b.L_per = sc.L_per;
    b.eps = sc.eps;
    b.y0 = hc.geom.y0;
    b.bie_hmm = [&](double x, double y) -> Vec2 { return bie.macro.velocity(x, y); };
    if (have_fno)
        b.fno_hmm = [&](double x, double y) -> Vec2 { return fno.macro.velocity(x, y); };
    b.naive = [&](double x, double y) -> Vec2 { return u0.velocity(x, y); };
    b.reference = [&](double x, double y) -> Vec2 { return ref.velocity(x, y); };

    std::vector<double> deltas;
    for (double o : cfg.at("eval").at("offsets_over_eps")) deltas.push_back(o * sc.eps);
    ErrorReport rep = error_family(b, deltas, cfg.at("eval").at("n_samples"));
    std::ofstream f(out + "/errors.jsonl");
    for (const auto& e : rep.entries) {
        json rec{{"delta", e.delta}, {"e_mdl", e.e_mdl}, {"e_cpl", e.e_cpl},
                 {"e_tot", e.e_tot}, {"e_lo", e.e_lo},   {"e_hi", e.e_hi}};
        f << rec.dump() << "\n";
        std::printf("delta=%.4f e_mdl=%.4e e_cpl=%.4e e_tot=%.4e e_lo=%.4e e_hi=%.4e\n",
                    e.delta, e.e_mdl, e.e_cpl, e.e_tot, e.e_lo, e.e_hi);
    }
    return 0;
}

int cmd_check_theory(const json& cfg, const std::string& data, const std::string& model_path,
                     const std::string& out) {
    write_manifest(out, "check-theory", cfg);
    const json& t = cfg.at("theory");
    RatioLemmaConfig rc;
    rc.a1 = t.at("a1");
    rc.a2 = t.at("a2");
    rc.delta1 = t.at("delta1");
    rc.delta2 = t.at("delta2");
    rc.C = t.at("C");
    rc.trials = t.at("trials");
    rc.seed = t.at("seed");
    RatioLemmaReport rr = check_ratio_lemma(rc);
    std::printf("ratio-lemma: estimate=%.6e +- %.1e bound=%.6e degenerate=%ld %s\n",
                rr.estimate, rr.stderr_, rr.bound, rr.degenerate,
                rr.pass ? "PASS" : "FAIL");
    bool ok = rr.pass;

    if (!data.empty() && !model_path.empty()) {
        auto [samples, manifest] = load_dataset(data);
        TrainState st = load_model(model_path);
        std::vector<RieszPair> pred, refp;
        std::vector<const Curve*> curves;
        for (int idx : manifest.test_idx) {
            const Sample& s = samples[idx];
            auto [r1, r2] = geo_fno_eval(st, s.curve, s.rt1, s.rt2);
            RieszPair p;
            p.r1 = r1;
            p.r2 = r2;
            p.curve_id = s.curve.id;
            RieszPair q;
            q.r1 = s.r1;
            q.r2 = s.r2;
            q.curve_id = s.curve.id;
            pred.push_back(p);
            refp.push_back(q);
            curves.push_back(&s.curve);
        }
        SlipBoundReport sb = check_slip_error_bound(pred, refp, curves, 20, 2.0, 1);
        std::printf("slip-bound: delta=%.4e eta1=%.3f eta2=%.3f worst=%.4e within=%.1f%% "
                    "degenerate=%ld %s\n",
                    sb.worst_delta, sb.min_eta1, sb.min_eta2, sb.worst_rel_err,
                    100.0 * sb.frac_within, sb.degenerate, sb.pass ? "PASS" : "FAIL");
        ok = ok && sb.pass;
    }
    return ok ? 0 : 2;
}

int cmd_bench(const json& cfg, const std::string& out) {
    write_manifest(out, "bench", cfg);
    // kernel benchmark: serial reference vs OpenMP
    MicroDomainSpec spec;
    spec.width = 1.0;
    spec.height = 0.9;
    spec.line_offset = 0.3;
    spec.corner_radius = 0.1;
    std::vector<double> wall(17, 0.0);
    for (int J : {256, 512, 1024}) {
        Curve c = build_micro_domain(spec, wall, J).curve;
        auto t0 = clk::now();
        NystromSystem ser = assemble_serial(c);
        double ts = elapsed(t0);
        t0 = clk::now();
        NystromSystem par = assemble(c);
        double tp = elapsed(t0);
        bool match = (ser.matrix - par.matrix).cwiseAbs().maxCoeff() == 0.0;
        std::printf("bench assemble J=%d serial=%.4fs parallel=%.4fs speedup=%.2f "
                    "match=%s\n",
                    J, ts, tp, ts / tp, match ? "yes" : "NO");
        if (!match) return 2;
    }
    // pipeline phase split on a small scenario run
    SineChannelScenario sc = scenario_from(cfg);
    TrainState model;
    HmmConfig hc = hmm_from(cfg, sc, model);
    auto t0 = clk::now();
    auto sites = precompute_representors(hc);
    double t_pre = elapsed(t0);
    t0 = clk::now();
    HmmResult res = run_hmm(hc, sites);
    double t_it = elapsed(t0);
    std::printf("bench hmm backend=%s J=%d precompute=%.2fs iterate=%.2fs iters=%d\n",
                hc.backend.c_str(), hc.J, t_pre, t_it, res.iterations);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rough-wall Stokes workbench"};
    app.require_subcommand(1);
    app.fallthrough(); // global options may follow the subcommand

    std::string config_path, out = "run";
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--set", overrides, "dotted-path config overrides key.path=value");
    app.add_option("--out", out, "run directory");

    std::string data_dir, model_path;
    int k_flag = -1, j_flag = -1, epochs_flag = -1;
    double eps_flag = -1, tol_flag = -1;
    long seed_flag = -1, trials_flag = -1;
    std::string backend_flag, offsets_flag;

    auto* gen = app.add_subcommand("gen-data", "generate a supervised dataset");
    gen->add_option("--k", k_flag, "sample count");
    gen->add_option("--j", j_flag, "boundary nodes per sample");
    gen->add_option("--seed", seed_flag, "master seed");

    auto* train = app.add_subcommand("train", "train the representor operator");
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--model-out", model_path, "output model path prefix");
    train->add_option("--epochs", epochs_flag, "training epochs");

    auto* pre = app.add_subcommand("precompute", "precompute micro representors");
    pre->add_option("--backend", backend_flag, "bie or fno");
    pre->add_option("--j", j_flag, "boundary nodes per micro box");
    pre->add_option("--model", model_path, "trained model path (fno backend)");

    auto* solve = app.add_subcommand("hmm-solve", "run the coupled macro-micro solve");
    solve->add_option("--backend", backend_flag, "bie or fno");
    solve->add_option("--j", j_flag, "boundary nodes per micro box");
    solve->add_option("--eps", eps_flag, "roughness scale");
    solve->add_option("--tol", tol_flag, "fixed-point tolerance");
    solve->add_option("--model", model_path, "trained model path (fno backend)");

    auto* ev = app.add_subcommand("eval", "compute the error family vs the reference");
    ev->add_option("--model", model_path, "trained model for the learned backend");
    ev->add_option("--j", j_flag, "boundary nodes per micro box");
    ev->add_option("--offsets", offsets_flag, "comma-separated offsets in units of eps");

    auto* th = app.add_subcommand("check-theory", "Monte-Carlo theory checks");
    th->add_option("--trials", trials_flag, "Monte-Carlo trials");
    th->add_option("--data", data_dir, "dataset for the slip-error bound");
    th->add_option("--model", model_path, "model for the slip-error bound");

    auto* be = app.add_subcommand("bench", "kernel and pipeline timings");
    be->add_option("--backend", backend_flag, "bie or fno");
    be->add_option("--j", j_flag, "boundary nodes per micro box");
    be->add_option("--model", model_path, "trained model path (fno backend)");

    CLI11_PARSE(app, argc, argv);

    try {
        json cfg = default_config();
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw CLI::ValidationError("cannot open config: " + config_path);
            json user = json::parse(f);
            cfg.merge_patch(user);
        }
        for (const auto& kv : overrides) apply_override(cfg, kv);
        // flag shortcuts map onto config paths
        if (k_flag >= 0) cfg["dataset"]["K"] = k_flag;
        if (seed_flag >= 0) cfg["dataset"]["seed"] = seed_flag;
        if (epochs_flag >= 0) cfg["train"]["epochs"] = epochs_flag;
        if (!backend_flag.empty()) cfg["hmm"]["backend"] = backend_flag;
        if (j_flag >= 0) {
            cfg["hmm"]["J"] = j_flag;
            cfg["dataset"]["J"] = j_flag;
        }
        if (eps_flag > 0) cfg["scenario"]["eps"] = eps_flag;
        if (tol_flag > 0) cfg["hmm"]["tol"] = tol_flag;
        if (trials_flag > 0) cfg["theory"]["trials"] = trials_flag;
        if (!model_path.empty() && (pre->parsed() || solve->parsed() || be->parsed()))
            cfg["hmm"]["model"] = model_path;
        if (!offsets_flag.empty()) {
            json arr = json::array();
            std::stringstream ss(offsets_flag);
            std::string tok;
            while (std::getline(ss, tok, ',')) arr.push_back(std::stod(tok));
            cfg["eval"]["offsets_over_eps"] = arr;
        }

        if (gen->parsed()) return cmd_gen_data(cfg, out);
        if (train->parsed())
            return cmd_train(cfg, data_dir,
                             model_path.empty() ? out + "/model" : model_path);
        if (pre->parsed()) return cmd_precompute(cfg, out);
        if (solve->parsed()) return cmd_hmm_solve(cfg, out);
        if (ev->parsed()) return cmd_eval(cfg, model_path, out);
        if (th->parsed()) return cmd_check_theory(cfg, data_dir, model_path, out);
        if (be->parsed()) return cmd_bench(cfg, out);
        return 1;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}
