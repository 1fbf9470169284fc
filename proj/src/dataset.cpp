#include "rws/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace rws {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
    return splitmix(splitmix(seed ^ splitmix(salt)) ^ index);
}

const std::uint64_t* crc_table() {
    static std::uint64_t table[256];
    static bool init = false;
    if (!init) {
        const std::uint64_t poly = 0xC96C5795D7870F42ull; // reflected ECMA-182
        for (int i = 0; i < 256; ++i) {
            std::uint64_t c = static_cast<std::uint64_t>(i);
            for (int k = 0; k < 8; ++k) c = (c & 1) ? (c >> 1) ^ poly : c >> 1;
            table[i] = c;
        }
        init = true;
    }
    return table;
}

struct Generated {
    bool ok = false;
    Sample sample;
};

Generated make_sample(const DatasetConfig& cfg, std::uint64_t seed, std::uint64_t index) {
    Generated g;
    NormalRng rng(stream_seed(seed, index, 0x5a11));
    double height = cfg.height_min + rng.uniform() * (cfg.height_max - cfg.height_min);
    double line_offset = cfg.line_min + rng.uniform() * (cfg.line_max - cfg.line_min);
    GpConfig gp = cfg.gp;
    gp.seed = stream_seed(seed, index, 0x6a22);
    std::vector<double> wall;
    try {
        wall = sample_rough_wall(gp);
    } catch (const std::exception&) {
        return g;
    }
    double amp = 0.0;
    for (double v : wall) amp = std::max(amp, std::abs(v));
    if (amp >= line_offset) return g; // segment must clear the roughness
    MicroDomainSpec spec;
    spec.width = cfg.width;
    spec.height = height;
    spec.line_offset = line_offset;
    spec.corner_radius = cfg.corner_radius;
    spec.gp = gp;
    try {
        MicroDomain md = build_micro_domain(spec, wall, cfg.J);
        NystromSystem sys = assemble(md.curve);
        RieszPair pair = compute_riesz_pair(sys, md.curve, md.segment, cfg.solve_tol);
        g.sample.curve = std::move(md.curve);
        g.sample.segment = md.segment;
        g.sample.rt1 = pair.rt1;
        g.sample.rt2 = pair.rt2;
        g.sample.r1 = pair.r1;
        g.sample.r2 = pair.r2;
        g.sample.seed = gp.seed;
        g.sample.wall_mean = md.wall_mean;
        g.sample.height = height;
        g.sample.line_offset = line_offset;
        g.ok = true;
    } catch (const std::exception&) {
        g.ok = false;
    }
    return g;
}

// Duality spot-check against a fresh forward solve (run on 1% of samples):
// <h, r>_W must equal <rt, omega>_W where omega solves the forward system,
// since r solves the adjoint system for rt.
void spot_check(const Sample& s) {
    NystromSystem sys = assemble(s.curve);
    const Curve& c = s.curve;
    BoundaryField h = BoundaryField::zero(c);
    for (int j = 0; j < c.J; ++j) h.set(j, Vec2(c.x[j].y() - s.wall_mean, 0.0));
    BoundaryField nf = BoundaryField::zero(c);
    for (int j = 0; j < c.J; ++j) nf.set(j, c.normal[j]);
    h.v -= (inner_w(c, h, nf) / inner_w(c, nf, nf)) * nf.v;
    BoundaryField omega = solve_dirichlet(sys, c, h);
    double e1 = std::abs(inner_w(c, h, s.r1) - inner_w(c, s.rt1, omega));
    double e2 = std::abs(inner_w(c, h, s.r2) - inner_w(c, s.rt2, omega));
    double scale = std::max(1.0, std::abs(inner_w(c, s.rt2, omega)));
    if (e1 > 1e-8 || e2 > 1e-8 * scale)
        throw DatasetError("duality spot-check failed: " + std::to_string(e1) + ", " +
                           std::to_string(e2));
}

json config_json(const DatasetConfig& cfg) {
    return json{{"J", cfg.J},
                {"width", cfg.width},
                {"corner_radius", cfg.corner_radius},
                {"height_min", cfg.height_min},
                {"height_max", cfg.height_max},
                {"line_min", cfg.line_min},
                {"line_max", cfg.line_max},
                {"solve_tol", cfg.solve_tol},
                {"gp",
                 {{"variance", cfg.gp.variance},
                  {"corr_len", cfg.gp.corr_len},
                  {"n_points", cfg.gp.n_points},
                  {"curvature_bound", cfg.gp.curvature_bound}}}};
}

DatasetConfig config_from_json(const json& j) {
    DatasetConfig cfg;
    cfg.J = j.at("J");
    cfg.width = j.at("width");
    cfg.corner_radius = j.at("corner_radius");
    cfg.height_min = j.at("height_min");
    cfg.height_max = j.at("height_max");
    cfg.line_min = j.at("line_min");
    cfg.line_max = j.at("line_max");
    cfg.solve_tol = j.at("solve_tol");
    cfg.gp.variance = j.at("gp").at("variance");
    cfg.gp.corr_len = j.at("gp").at("corr_len");
    cfg.gp.n_points = j.at("gp").at("n_points");
    cfg.gp.curvature_bound = j.at("gp").at("curvature_bound");
    return cfg;
}

} // namespace

std::uint64_t crc64(const void* data, std::size_t n, std::uint64_t crc) {
    const std::uint64_t* table = crc_table();
    const unsigned char* p = static_cast<const unsigned char*>(data);
    crc = ~crc;
    for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xff] ^ (crc >> 8);
    return ~crc;
}

std::vector<double> sample_record(const Sample& s) {
    const Curve& c = s.curve;
    std::vector<double> rec(static_cast<std::size_t>(c.J) * kChannels);
    for (int j = 0; j < c.J; ++j) {
        double* r = rec.data() + static_cast<std::size_t>(j) * kChannels;
        r[0] = c.x[j].x();
        r[1] = c.x[j].y();
        r[2] = c.dx[j].x();
        r[3] = c.dx[j].y();
        r[4] = s.rt1.v(2 * j);
        r[5] = s.rt1.v(2 * j + 1);
        r[6] = s.rt2.v(2 * j);
        r[7] = s.rt2.v(2 * j + 1);
        r[8] = s.r1.v(2 * j);
        r[9] = s.r1.v(2 * j + 1);
        r[10] = s.r2.v(2 * j);
        r[11] = s.r2.v(2 * j + 1);
    }
    return rec;
}

void compute_statistics(const std::vector<Sample>& samples, const std::vector<int>& idx,
                        std::array<double, 12>& mean, std::array<double, 12>& stdev) {
    mean.fill(0.0);
    stdev.fill(0.0);
    std::size_t count = 0;
    for (int i : idx) {
        auto rec = sample_record(samples.at(i));
        const int J = samples.at(i).curve.J;
        for (int j = 0; j < J; ++j)
            for (int ch = 0; ch < kChannels; ++ch)
                mean[ch] += rec[static_cast<std::size_t>(j) * kChannels + ch];
        count += static_cast<std::size_t>(J);
    }
    if (count == 0) throw DatasetError("statistics over an empty split");
    for (auto& m : mean) m /= static_cast<double>(count);
    for (int i : idx) {
        auto rec = sample_record(samples.at(i));
        const int J = samples.at(i).curve.J;
        for (int j = 0; j < J; ++j)
            for (int ch = 0; ch < kChannels; ++ch) {
                double d = rec[static_cast<std::size_t>(j) * kChannels + ch] - mean[ch];
                stdev[ch] += d * d;
            }
    }
    for (auto& s : stdev) s = std::sqrt(s / static_cast<double>(count));
}

DatasetManifest generate_dataset(const DatasetConfig& cfg, int K, std::uint64_t seed,
                                 const std::string& dir, double train_frac) {
    if (K < 1) throw DatasetError("K must be >= 1");
    if (cfg.J < 8) throw DatasetError("J too small");
    fs::create_directories(dir);
    const std::string data_path = dir + "/data.bin";
    const std::string partial_path = dir + "/data.partial";
    const std::string meta_path = dir + "/meta.partial";
    const std::size_t rec_doubles = static_cast<std::size_t>(cfg.J) * kChannels;

    DatasetManifest man;
    man.K = K;
    man.J = cfg.J;
    man.seed = seed;
    man.cfg = cfg;

    std::vector<Sample> samples;
    samples.reserve(K);
    std::uint64_t next_index = 0;
    int produced = 0;

    // Resume from a partial run: per-sample streams make regeneration of
    // recorded indices deterministic, so we only replay metadata.
    if (fs::exists(meta_path) && fs::exists(partial_path)) {
        std::ifstream mf(meta_path);
        std::string tag;
        std::uint64_t idx;
        std::vector<std::uint64_t> ok_indices;
        while (mf >> tag >> idx) {
            if (tag == "ok") ok_indices.push_back(idx);
            else ++man.skipped;
            next_index = idx + 1;
        }
        auto bytes = fs::file_size(partial_path);
        if (bytes == ok_indices.size() * rec_doubles * sizeof(double)) {
            for (std::uint64_t i : ok_indices) {
                Generated g = make_sample(cfg, seed, i);
                if (!g.ok) throw DatasetError("partial file inconsistent with seed");
                samples.push_back(std::move(g.sample));
                ++produced;
                if (produced >= K) break;
            }
        } else {
            // partial files corrupt: start over
            fs::remove(partial_path);
            fs::remove(meta_path);
            next_index = 0;
            man.skipped = 0;
            samples.clear();
            produced = 0;
        }
    }

    {
        std::ofstream df(partial_path, std::ios::binary | std::ios::app);
        std::ofstream mf(meta_path, std::ios::app);
        while (produced < K) {
            Generated g = make_sample(cfg, seed, next_index);
            if (!g.ok) {
                mf << "skip " << next_index << "\n";
                ++man.skipped;
                ++next_index;
                if (man.skipped > 100 * K + 100)
                    throw DatasetError("excessive skip rate; check generation config");
                continue;
            }
            if (produced % 100 == 0) spot_check(g.sample);
            auto rec = sample_record(g.sample);
            df.write(reinterpret_cast<const char*>(rec.data()),
                     static_cast<std::streamsize>(rec.size() * sizeof(double)));
            df.flush();
            mf << "ok " << next_index << "\n";
            mf.flush();
            samples.push_back(std::move(g.sample));
            ++produced;
            ++next_index;
        }
    }

    // Split: deterministic shuffle of [0, K).
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    NormalRng srng(splitmix(seed ^ 0xfeed));
    for (int i = K - 1; i > 0; --i) {
        int j = static_cast<int>(srng.uniform() * (i + 1));
        j = std::min(j, i);
        std::swap(order[i], order[j]);
    }
    int n_train = std::max(1, static_cast<int>(std::lround(train_frac * K)));
    n_train = std::min(n_train, K);
    man.train_idx.assign(order.begin(), order.begin() + n_train);
    man.test_idx.assign(order.begin() + n_train, order.end());
    std::sort(man.train_idx.begin(), man.train_idx.end());
    std::sort(man.test_idx.begin(), man.test_idx.end());

    compute_statistics(samples, man.train_idx, man.mean, man.stdev);

    for (const Sample& s : samples) {
        DatasetManifest::SampleMeta m;
        m.seed = s.seed;
        m.ax = s.segment.a.x();
        m.ay = s.segment.a.y();
        m.bx = s.segment.b.x();
        m.by = s.segment.b.y();
        m.wall_mean = s.wall_mean;
        m.height = s.height;
        m.line_offset = s.line_offset;
        man.samples.push_back(m);
    }

    // Final data file: all records, then the CRC64 of the array bytes.
    {
        std::vector<double> all(static_cast<std::size_t>(K) * rec_doubles);
        for (int i = 0; i < K; ++i) {
            auto rec = sample_record(samples[i]);
            std::copy(rec.begin(), rec.end(), all.begin() + i * rec_doubles);
        }
        man.crc = crc64(all.data(), all.size() * sizeof(double));
        std::ofstream out(data_path, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(all.data()),
                  static_cast<std::streamsize>(all.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(&man.crc), sizeof(man.crc));
        if (!out) throw DatasetError("failed to write " + data_path);
    }
    fs::remove(partial_path);
    fs::remove(meta_path);

    json j;
    j["version"] = man.version;
    j["K"] = man.K;
    j["J"] = man.J;
    j["skipped"] = man.skipped;
    j["seed"] = man.seed;
    j["config"] = config_json(cfg);
    j["channels"] = {"x", "y", "xp", "yp", "rt1x", "rt1y", "rt2x", "rt2y",
                     "r1x", "r1y", "r2x", "r2y"};
    j["mean"] = man.mean;
    j["stdev"] = man.stdev;
    j["train_idx"] = man.train_idx;
    j["test_idx"] = man.test_idx;
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(man.crc));
    j["crc64"] = std::string(hex);
    json js = json::array();
    for (const auto& m : man.samples)
        js.push_back(json{{"seed", m.seed},
                          {"a", {m.ax, m.ay}},
                          {"b", {m.bx, m.by}},
                          {"wall_mean", m.wall_mean},
                          {"height", m.height},
                          {"line_offset", m.line_offset}});
    j["samples"] = js;
    std::ofstream mout(dir + "/manifest.json");
    mout << j.dump(1) << "\n";
    if (!mout) throw DatasetError("failed to write manifest");
    return man;
}

std::pair<std::vector<Sample>, DatasetManifest> load_dataset(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw DatasetError("missing manifest: " + dir);
    json j = json::parse(mf);
    DatasetManifest man;
    man.version = j.at("version");
    if (man.version != "RWS1") throw DatasetError("unsupported dataset version");
    man.K = j.at("K");
    man.J = j.at("J");
    man.skipped = j.at("skipped");
    man.seed = j.at("seed");
    man.cfg = config_from_json(j.at("config"));
    for (int c = 0; c < kChannels; ++c) {
        man.mean[c] = j.at("mean").at(c);
        man.stdev[c] = j.at("stdev").at(c);
    }
    man.train_idx = j.at("train_idx").get<std::vector<int>>();
    man.test_idx = j.at("test_idx").get<std::vector<int>>();
    man.crc = std::stoull(j.at("crc64").get<std::string>(), nullptr, 16);
    for (const auto& sj : j.at("samples")) {
        DatasetManifest::SampleMeta m;
        m.seed = sj.at("seed");
        m.ax = sj.at("a").at(0);
        m.ay = sj.at("a").at(1);
        m.bx = sj.at("b").at(0);
        m.by = sj.at("b").at(1);
        m.wall_mean = sj.at("wall_mean");
        m.height = sj.at("height");
        m.line_offset = sj.at("line_offset");
        man.samples.push_back(m);
    }
    if (static_cast<int>(man.samples.size()) != man.K)
        throw DatasetError("manifest sample count mismatch");

    const std::size_t rec_doubles = static_cast<std::size_t>(man.J) * kChannels;
    const std::size_t expect = static_cast<std::size_t>(man.K) * rec_doubles * sizeof(double) +
                               sizeof(std::uint64_t);
    std::ifstream df(dir + "/data.bin", std::ios::binary);
    if (!df) throw DatasetError("missing data file");
    df.seekg(0, std::ios::end);
    if (static_cast<std::size_t>(df.tellg()) != expect)
        throw DatasetError("truncated data file");
    df.seekg(0);
    std::vector<double> all(static_cast<std::size_t>(man.K) * rec_doubles);
    df.read(reinterpret_cast<char*>(all.data()),
            static_cast<std::streamsize>(all.size() * sizeof(double)));
    std::uint64_t stored = 0;
    df.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    if (!df) throw DatasetError("short read");
    std::uint64_t actual = crc64(all.data(), all.size() * sizeof(double));
    if (stored != actual || stored != man.crc) throw DatasetError("checksum failure");

    const double two_pi = 2.0 * 3.14159265358979323846;
    std::vector<Sample> samples(man.K);
    for (int i = 0; i < man.K; ++i) {
        Sample& s = samples[i];
        Curve& c = s.curve;
        c.J = man.J;
        c.t.resize(c.J);
        c.x.resize(c.J);
        c.dx.resize(c.J);
        c.ddx.assign(c.J, Vec2::Zero()); // not stored; unused downstream
        c.normal.resize(c.J);
        c.tangent.resize(c.J);
        c.kappa.assign(c.J, 0.0); // not stored
        c.w.resize(c.J);
        c.id = 0;
        const double* rec = all.data() + static_cast<std::size_t>(i) * rec_doubles;
        s.rt1 = s.rt2 = s.r1 = s.r2 = BoundaryField{Eigen::VectorXd::Zero(2 * c.J), 0};
        for (int jn = 0; jn < c.J; ++jn) {
            const double* r = rec + static_cast<std::size_t>(jn) * kChannels;
            c.t[jn] = two_pi * jn / c.J;
            c.x[jn] = Vec2(r[0], r[1]);
            c.dx[jn] = Vec2(r[2], r[3]);
            double sp = c.dx[jn].norm();
            c.tangent[jn] = c.dx[jn] / sp;
            c.normal[jn] = Vec2(c.tangent[jn].y(), -c.tangent[jn].x());
            c.w[jn] = two_pi / c.J * sp;
            s.rt1.v(2 * jn) = r[4];
            s.rt1.v(2 * jn + 1) = r[5];
            s.rt2.v(2 * jn) = r[6];
            s.rt2.v(2 * jn + 1) = r[7];
            s.r1.v(2 * jn) = r[8];
            s.r1.v(2 * jn + 1) = r[9];
            s.r2.v(2 * jn) = r[10];
            s.r2.v(2 * jn + 1) = r[11];
        }
        const auto& m = man.samples[i];
        s.segment = LineSegment::make(Vec2(m.ax, m.ay), Vec2(m.bx, m.by));
        s.seed = m.seed;
        s.wall_mean = m.wall_mean;
        s.height = m.height;
        s.line_offset = m.line_offset;
    }
    return {std::move(samples), std::move(man)};
}

} // namespace rws
