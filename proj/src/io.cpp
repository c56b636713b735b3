#include "nrchain/io.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nrchain/analytic.hpp"
#include "nrchain/fock.hpp"
#include "nrchain/gaussian.hpp"

namespace nrchain::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Value parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& s) {
    size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + s + "'");
    }
    if (pos != s.size()) throw ConfigError("not a number: '" + s + "'");
    return v;
}

long to_long(const std::string& s) {
    size_t pos = 0;
    long v;
    try {
        v = std::stol(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not an integer: '" + s + "'");
    }
    if (pos != s.size()) throw ConfigError("not an integer: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

}  // namespace

double parse_number(const std::string& raw) {
    std::string s = trim(raw);
    if (s.empty()) throw ConfigError("empty number");
    const size_t pip = s.find("pi");
    if (pip == std::string::npos) return to_double(s);
    double sign = 1.0;
    std::string head = s.substr(0, pip);
    if (!head.empty() && (head == "-" || head == "+")) {
        sign = (head == "-") ? -1.0 : 1.0;
        head.clear();
    }
    const double coeff = head.empty() ? 1.0 : to_double(head);
    std::string tail = s.substr(pip + 2);
    double div = 1.0;
    if (!tail.empty()) {
        if (tail[0] != '/') throw ConfigError("bad pi expression: '" + raw + "'");
        div = to_double(tail.substr(1));
    }
    return sign * coeff * M_PI / div;
}

std::vector<double> parse_value_list(const std::string& raw) {
    std::string s = trim(raw);
    if (s.rfind("linspace(", 0) == 0 && s.back() == ')') {
        const auto args = split(s.substr(9, s.size() - 10), ',');
        if (args.size() != 3) throw ConfigError("linspace needs (start, stop, count)");
        const double a = parse_number(args[0]);
        const double b = parse_number(args[1]);
        const long n = to_long(args[2]);
        if (n < 2) throw ConfigError("linspace count must be >= 2");
        std::vector<double> out(n);
        for (long i = 0; i < n; ++i) out[i] = a + (b - a) * double(i) / double(n - 1);
        return out;
    }
    std::vector<double> out;
    for (const auto& tok : split(s, ',')) out.push_back(parse_number(tok));
    if (out.empty()) throw ConfigError("empty value list");
    return out;
}

// ---------------------------------------------------------------------------
// Config assembly
// ---------------------------------------------------------------------------

KeyValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    KeyValues out;
    std::string line;
    while (std::getline(in, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("bad config line: '" + line + "'");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

namespace {

const std::vector<std::string> kSweepable = {"theta", "phi", "gamma", "kappa", "delta", "J", "L"};

void apply_pair(RunConfig& cfg, const std::string& key, const std::string& value,
                bool& have_L, bool& have_solver) {
    if (key == "L") {
        cfg.params.L = int(to_long(value));
        have_L = true;
    } else if (key == "J") {
        cfg.params.J = parse_number(value);
    } else if (key == "delta") {
        cfg.params.delta = parse_number(value);
    } else if (key == "gamma") {
        cfg.params.gamma = parse_number(value);
    } else if (key == "kappa") {
        cfg.params.kappa = parse_number(value);
    } else if (key == "theta") {
        cfg.params.theta = parse_number(value);
    } else if (key == "phi") {
        cfg.params.phi = parse_number(value);
    } else if (key == "bc") {
        if (value == "periodic") {
            cfg.params.bc = Boundary::periodic;
        } else if (value == "open") {
            cfg.params.bc = Boundary::open;
        } else {
            throw ConfigError("bc must be 'periodic' or 'open', got '" + value + "'");
        }
    } else if (key == "solver") {
        if (value == "analytic") cfg.solver = Solver::analytic;
        else if (value == "gaussian") cfg.solver = Solver::gaussian;
        else if (value == "trajectories") cfg.solver = Solver::trajectories;
        else if (value == "liouville") cfg.solver = Solver::liouville;
        else throw ConfigError("unknown solver '" + value + "'");
        have_solver = true;
    } else if (key == "initial_state") {
        cfg.initial_state = value;
    } else if (key == "t_max") {
        cfg.t_max = parse_number(value);
    } else if (key == "n_samples") {
        cfg.n_samples = int(to_long(value));
    } else if (key == "n_trajectories") {
        cfg.n_trajectories = int(to_long(value));
    } else if (key == "master_seed") {
        cfg.master_seed = std::uint64_t(to_long(value));
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else if (key == "cuts") {
        cfg.cuts.clear();
        for (const auto& t : split(value, ',')) cfg.cuts.push_back(int(to_long(t)));
    } else if (key == "observables") {
        cfg.observables = split(value, ',');
    } else if (key.rfind("sweep.", 0) == 0) {
        const std::string param = key.substr(6);
        if (std::find(kSweepable.begin(), kSweepable.end(), param) == kSweepable.end()) {
            throw ConfigError("cannot sweep over '" + param + "'");
        }
        cfg.sweep[param] = parse_value_list(value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void validate_config(RunConfig& cfg) {
    try {
        cfg.params = validate(cfg.params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.t_max <= 0.0) throw ConfigError("t_max must be > 0");
    if (cfg.n_samples < 2) throw ConfigError("n_samples must be >= 2");
    if (cfg.solver == Solver::trajectories && cfg.n_trajectories < 2) {
        throw ConfigError("solver=trajectories requires n_trajectories >= 2");
    }
    if (cfg.solver == Solver::analytic && cfg.params.bc != Boundary::periodic) {
        throw ConfigError("the analytic tier has no open-boundary solutions; use bc=periodic");
    }
    if (cfg.solver == Solver::gaussian && cfg.params.delta != 0.0) {
        throw ConfigError("solver=gaussian requires delta=0 (use trajectories or liouville)");
    }
    if (cfg.solver == Solver::liouville && cfg.params.L > 6) {
        throw ConfigError("solver=liouville is limited to L <= 6");
    }
    if (cfg.solver == Solver::trajectories && cfg.params.L > 20) {
        throw ConfigError("solver=trajectories is limited to L <= 20");
    }
    for (int c : cfg.cuts) {
        if (c < 1 || c >= cfg.params.L) throw ConfigError("entanglement cut out of range");
    }
    static const std::vector<std::string> known = {"density", "current", "kinetic",
                                                   "nk", "entropy", "doublon"};
    for (const auto& o : cfg.observables) {
        if (std::find(known.begin(), known.end(), o) == known.end()) {
            throw ConfigError("unknown observable '" + o + "'");
        }
    }
    // Resolve the initial state early so bad patterns fail at parse time.
    initial_bits(cfg);
}

}  // namespace

RunConfig make_config(const KeyValues& file_pairs, const KeyValues& overrides) {
    RunConfig cfg;
    cfg.params.gamma = 0.1;
    cfg.params.kappa = 0.1;
    cfg.params.theta = M_PI / 2;
    cfg.params.phi = M_PI / 2;
    bool have_L = false, have_solver = false;
    for (const auto& [k, v] : file_pairs) apply_pair(cfg, k, v, have_L, have_solver);
    for (const auto& [k, v] : overrides) apply_pair(cfg, k, v, have_L, have_solver);
    if (!have_L) throw ConfigError("missing required key 'L'");
    if (!have_solver) throw ConfigError("missing required key 'solver'");
    validate_config(cfg);
    return cfg;
}

RunConfig parse_config(const std::string& path, const KeyValues& overrides) {
    return make_config(read_config_file(path), overrides);
}

std::vector<int> initial_bits(const RunConfig& cfg) {
    const int L = cfg.params.L;
    std::vector<int> bits(L, 0);
    if (cfg.initial_state == "vacuum") {
        return bits;
    } else if (cfg.initial_state == "full") {
        std::fill(bits.begin(), bits.end(), 1);
    } else if (cfg.initial_state == "cdw") {
        for (int j = 0; j < L; j += 2) bits[j] = 1;
    } else if (cfg.initial_state == "domain-wall") {
        for (int j = 0; j < L / 2; ++j) bits[j] = 1;
    } else if (cfg.initial_state.rfind("bitstring:", 0) == 0) {
        const std::string pat = cfg.initial_state.substr(10);
        if (int(pat.size()) != L) throw ConfigError("bitstring length must equal L");
        for (int j = 0; j < L; ++j) {
            if (pat[j] != '0' && pat[j] != '1') throw ConfigError("bitstring must be 0/1");
            bits[j] = pat[j] - '0';
        }
    } else {
        throw ConfigError("unknown initial_state '" + cfg.initial_state + "'");
    }
    return bits;
}

std::vector<RunConfig> expand_sweep(const RunConfig& cfg) {
    if (cfg.sweep.empty()) return {cfg};
    std::vector<std::pair<std::string, std::vector<double>>> axes(cfg.sweep.begin(),
                                                                  cfg.sweep.end());
    size_t total = 1;
    for (const auto& [k, v] : axes) total *= v.size();
    std::vector<RunConfig> out;
    out.reserve(total);
    for (size_t idx = 0; idx < total; ++idx) {
        RunConfig pt = cfg;
        pt.sweep.clear();
        size_t rem = idx;
        for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
            const double v = it->second[rem % it->second.size()];
            rem /= it->second.size();
            const std::string& name = it->first;
            if (name == "theta") pt.params.theta = v;
            else if (name == "phi") pt.params.phi = v;
            else if (name == "gamma") pt.params.gamma = v;
            else if (name == "kappa") pt.params.kappa = v;
            else if (name == "delta") pt.params.delta = v;
            else if (name == "J") pt.params.J = v;
            else if (name == "L") pt.params.L = int(std::lround(v));
        }
        pt.params = validate(pt.params);
        out.push_back(pt);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Series computation
// ---------------------------------------------------------------------------

namespace {

std::vector<double> time_grid(const RunConfig& cfg) {
    std::vector<double> t(cfg.n_samples);
    for (int i = 0; i < cfg.n_samples; ++i) {
        t[i] = cfg.t_max * double(i) / double(cfg.n_samples - 1);
    }
    t.front() = 0.0;
    return t;
}

bool wants(const RunConfig& cfg, const std::string& name, bool dflt) {
    if (cfg.observables.empty()) return dflt;
    return std::find(cfg.observables.begin(), cfg.observables.end(), name) !=
           cfg.observables.end();
}

Eigen::MatrixXd row_matrix(const Eigen::VectorXd& v) {
    Eigen::MatrixXd m(1, v.size());
    m.row(0) = v;
    return m;
}

Series analytic_series(const RunConfig& cfg) {
    const ModelParams& p = cfg.params;
    analytic::PbcInitial init;
    if (cfg.initial_state == "vacuum") init = analytic::PbcInitial::vacuum;
    else if (cfg.initial_state == "full") init = analytic::PbcInitial::full;
    else if (cfg.initial_state == "cdw") init = analytic::PbcInitial::cdw;
    else throw ConfigError("analytic tier supports initial_state vacuum|full|cdw");
    const bool staggered = init == analytic::PbcInitial::cdw;
    const auto t = time_grid(cfg);
    const int ns = int(t.size());
    const int w = staggered ? 2 : 1;  // cdw: even and odd sublattices
    Series s;
    s.t = t;
    Eigen::MatrixXd n(ns, w), cur(ns, w);
    for (int i = 0; i < ns; ++i) {
        for (int j = 0; j < w; ++j) {
            const auto dc = analytic::transient_series(p, init, j, t[i]);
            n(i, j) = dc.density;
            cur(i, j) = dc.current;
        }
    }
    s.tracks["n"] = {n, {}};
    s.tracks["I"] = {cur, {}};
    return s;
}

Series gaussian_series(const RunConfig& cfg) {
    const ModelParams& p = cfg.params;
    const auto bits = initial_bits(cfg);
    const auto t = time_grid(cfg);
    auto gen = gaussian::build_generator(p);
    const bool want_nk = wants(cfg, "nk", true);
    const bool want_kin = wants(cfg, "kinetic", false);
    const int ns = int(t.size());
    Series s;
    s.t = t;
    const int nb = (p.bc == Boundary::periodic) ? p.L : p.L - 1;
    Eigen::MatrixXd n(ns, p.L), cur(ns, nb), kin(ns, nb), nk(ns, p.L);
    gaussian::EvolveOptions opts;
    opts.check_stride = 16;
    gaussian::evolve(gen, gaussian::product_state(bits), t, opts,
                     [&](int i, double, const gaussian::Matrix& C) {
                         const auto o = gaussian::observables(C, p);
                         n.row(i) = o.density;
                         cur.row(i) = o.current;
                         kin.row(i) = o.kinetic;
                         nk.row(i) = o.nk;
                     });
    s.tracks["n"] = {n, {}};
    if (wants(cfg, "current", true)) s.tracks["I"] = {cur, {}};
    if (want_kin) s.tracks["h"] = {kin, {}};
    if (want_nk) s.tracks["nk"] = {nk, {}};
    return s;
}

Series trajectory_series(const RunConfig& cfg) {
    const ModelParams& p = cfg.params;
    const auto t = time_grid(cfg);
    auto ops = fock::build_operators(p);
    fock::EnsembleOptions e;
    e.n_trajectories = cfg.n_trajectories;
    e.master_seed = cfg.master_seed;
    e.cuts = cfg.cuts;
    e.record_current = wants(cfg, "current", true);
    e.record_nk = wants(cfg, "nk", false);
    e.record_entropy = wants(cfg, "entropy", true);
    e.record_doublon = wants(cfg, "doublon", true);
    const auto res = fock::run_ensemble(ops, fock::basis_state(initial_bits(cfg)), t, e);
    Series s;
    s.t = t;
    s.tracks["n"] = {res.density.mean, res.density.sem};
    if (e.record_current) s.tracks["I"] = {res.current.mean, res.current.sem};
    if (e.record_nk) s.tracks["nk"] = {res.nk.mean, res.nk.sem};
    if (e.record_doublon) s.tracks["D"] = {res.doublon.mean, res.doublon.sem};
    if (e.record_entropy) {
        for (size_t c = 0; c < res.cuts.size(); ++c) {
            s.tracks["S" + std::to_string(res.cuts[c])] = {res.entropy.mean.col(int(c)),
                                                           res.entropy.sem.col(int(c))};
        }
    }
    return s;
}

Series liouville_series(const RunConfig& cfg) {
    const ModelParams& p = cfg.params;
    const auto t = time_grid(cfg);
    auto ops = liouville::build_liouville(p);
    const int ns = int(t.size());
    const int nb = (p.bc == Boundary::periodic) ? p.L : p.L - 1;
    Series s;
    s.t = t;
    Eigen::MatrixXd n(ns, p.L), cur(ns, nb), dbl(ns, 1);
    liouville::RhoEvolveOptions opts;
    opts.check_stride = 16;
    liouville::evolve_rho(ops, liouville::rho_from_bits(initial_bits(cfg)), t, opts,
                          [&](int i, double, const liouville::Matrix& rho) {
                              const auto o = liouville::rho_observables(rho, p);
                              n.row(i) = o.density;
                              cur.row(i) = o.current;
                              dbl(i, 0) = o.doublon;
                          });
    s.tracks["n"] = {n, {}};
    if (wants(cfg, "current", true)) s.tracks["I"] = {cur, {}};
    if (wants(cfg, "doublon", true)) s.tracks["D"] = {dbl, {}};
    return s;
}

}  // namespace

Series run_series(const RunConfig& cfg) {
    switch (cfg.solver) {
        case Solver::analytic: return analytic_series(cfg);
        case Solver::gaussian: return gaussian_series(cfg);
        case Solver::trajectories: return trajectory_series(cfg);
        case Solver::liouville: return liouville_series(cfg);
    }
    throw ConfigError("unreachable solver");
}

// ---------------------------------------------------------------------------
// CSV + metadata
// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_series_csv(const std::string& path, const Series& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t";
    for (const auto& [name, tr] : s.tracks) {
        for (int c = 0; c < tr.values.cols(); ++c) out << "," << name << "_" << c;
        if (tr.sem.size() > 0) {
            for (int c = 0; c < tr.values.cols(); ++c) out << "," << name << "_" << c << "_se";
        }
    }
    out << "\n";
    for (size_t i = 0; i < s.t.size(); ++i) {
        out << fmt_double(s.t[i]);
        for (const auto& [name, tr] : s.tracks) {
            for (int c = 0; c < tr.values.cols(); ++c) out << "," << fmt_double(tr.values(int(i), c));
            if (tr.sem.size() > 0) {
                for (int c = 0; c < tr.sem.cols(); ++c) out << "," << fmt_double(tr.sem(int(i), c));
            }
        }
        out << "\n";
    }
}

Series read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty csv: " + path);
    const auto names = split(header, ',');
    if (names.empty() || names[0] != "t") throw std::runtime_error("csv must start with t column");

    std::vector<std::vector<double>> columns(names.size());
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto toks = split(line, ',');
        if (toks.size() != names.size()) throw std::runtime_error("ragged csv row in " + path);
        for (size_t c = 0; c < toks.size(); ++c) columns[c].push_back(to_double(toks[c]));
    }
    Series s;
    s.t = columns[0];
    const int ns = int(s.t.size());
    // Column names are <track>_<index> with an optional _se suffix.
    struct Slot { bool se; std::string track; int comp; };
    std::vector<Slot> slots(names.size());
    std::map<std::string, int> width;
    for (size_t c = 1; c < names.size(); ++c) {
        std::string n = names[c];
        bool se = false;
        if (n.size() > 3 && n.substr(n.size() - 3) == "_se") {
            se = true;
            n = n.substr(0, n.size() - 3);
        }
        const size_t us = n.rfind('_');
        if (us == std::string::npos) throw std::runtime_error("bad csv column name " + names[c]);
        const std::string track = n.substr(0, us);
        const int comp = int(to_long(n.substr(us + 1)));
        slots[c] = {se, track, comp};
        width[track] = std::max(width[track], comp + 1);
    }
    for (const auto& [track, w] : width) {
        s.tracks[track].values = Eigen::MatrixXd::Zero(ns, w);
    }
    for (size_t c = 1; c < names.size(); ++c) {
        if (!slots[c].se) continue;
        auto& tr = s.tracks[slots[c].track];
        if (tr.sem.size() == 0) tr.sem = Eigen::MatrixXd::Zero(ns, width[slots[c].track]);
    }
    for (size_t c = 1; c < names.size(); ++c) {
        auto& tr = s.tracks[slots[c].track];
        Eigen::MatrixXd& dst = slots[c].se ? tr.sem : tr.values;
        for (int i = 0; i < ns; ++i) dst(i, slots[c].comp) = columns[c][size_t(i)];
    }
    return s;
}

void write_metadata(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# nrchain " << NRCHAIN_VERSION << "\n";
    out << "# threads=" << omp_get_max_threads() << "\n";
    out << "L=" << cfg.params.L << "\n";
    out << "J=" << fmt_double(cfg.params.J) << "\n";
    out << "delta=" << fmt_double(cfg.params.delta) << "\n";
    out << "gamma=" << fmt_double(cfg.params.gamma) << "\n";
    out << "kappa=" << fmt_double(cfg.params.kappa) << "\n";
    out << "theta=" << fmt_double(cfg.params.theta) << "\n";
    out << "phi=" << fmt_double(cfg.params.phi) << "\n";
    out << "bc=" << (cfg.params.bc == Boundary::periodic ? "periodic" : "open") << "\n";
    out << "solver=" << solver_name(cfg.solver) << "\n";
    out << "initial_state=" << cfg.initial_state << "\n";
    out << "t_max=" << fmt_double(cfg.t_max) << "\n";
    out << "n_samples=" << cfg.n_samples << "\n";
    if (cfg.solver == Solver::trajectories) {
        out << "n_trajectories=" << cfg.n_trajectories << "\n";
    }
    out << "master_seed=" << cfg.master_seed << "\n";
    out << "out_dir=" << cfg.out_dir << "\n";
    if (!cfg.cuts.empty()) {
        out << "cuts=";
        for (size_t i = 0; i < cfg.cuts.size(); ++i) out << (i ? "," : "") << cfg.cuts[i];
        out << "\n";
    }
    if (!cfg.observables.empty()) {
        out << "observables=";
        for (size_t i = 0; i < cfg.observables.size(); ++i)
            out << (i ? "," : "") << cfg.observables[i];
        out << "\n";
    }
    for (const auto& [k, v] : cfg.sweep) {
        out << "sweep." << k << "=";
        for (size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << fmt_double(v[i]);
        out << "\n";
    }
}

std::string solver_name(Solver s) {
    switch (s) {
        case Solver::analytic: return "analytic";
        case Solver::gaussian: return "gaussian";
        case Solver::trajectories: return "trajectories";
        case Solver::liouville: return "liouville";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Run dispatch
// ---------------------------------------------------------------------------

namespace {

struct SummaryRow {
    std::vector<std::pair<std::string, double>> cells;
};

SummaryRow summarize(const RunConfig& cfg, const Series* series) {
    SummaryRow row;
    const ModelParams& p = cfg.params;
    for (const auto& [name, vals] : cfg.sweep) {
        double v = 0.0;
        if (name == "theta") v = p.theta;
        else if (name == "phi") v = p.phi;
        else if (name == "gamma") v = p.gamma;
        else if (name == "kappa") v = p.kappa;
        else if (name == "delta") v = p.delta;
        else if (name == "J") v = p.J;
        else if (name == "L") v = p.L;
        row.cells.emplace_back(name, v);
    }
    if (cfg.solver == Solver::analytic) {
        row.cells.emplace_back("gap", analytic::dissipative_gap(p));
        const auto ss = analytic::steady_observables(p);
        row.cells.emplace_back("density_ss", ss.density);
        row.cells.emplace_back("current_ss", ss.current);
        const auto [jp, jm] = analytic::hopping_amplitudes(p);
        row.cells.emplace_back("Jp_re", jp.real());
        row.cells.emplace_back("Jp_im", jp.imag());
        row.cells.emplace_back("Jm_re", jm.real());
        row.cells.emplace_back("Jm_im", jm.imag());
        const auto cl = analytic::correlation_length(p);
        row.cells.emplace_back("xi_inv", cl.delta_correlated ? -1.0 : cl.xi_inv);
    } else if (series) {
        const int last = int(series->t.size()) - 1;
        for (const auto& [name, tr] : series->tracks) {
            row.cells.emplace_back(name + "_final_mean", tr.values.row(last).mean());
        }
    }
    return row;
}

}  // namespace

RunOutput run(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    RunOutput out;
    const auto points = expand_sweep(cfg);
    const bool is_sweep = !cfg.sweep.empty();

    std::vector<SummaryRow> rows;
    for (size_t i = 0; i < points.size(); ++i) {
        RunConfig pt = points[i];
        // Per-point seeds stay reproducible under reordering.
        pt.master_seed = cfg.master_seed + i;
        if (cfg.solver == Solver::analytic && is_sweep) {
            rows.push_back(summarize(pt, nullptr));
            continue;
        }
        const Series s = run_series(pt);
        char name[64];
        if (is_sweep) {
            std::snprintf(name, sizeof name, "run_%04zu", i);
        } else {
            std::snprintf(name, sizeof name, "run");
        }
        const std::string base = (fs::path(cfg.out_dir) / name).string();
        write_series_csv(base + ".csv", s);
        write_metadata(base + ".meta", pt);
        out.series_files.push_back(base + ".csv");
        if (is_sweep) rows.push_back(summarize(pt, &s));
    }

    if (is_sweep) {
        const std::string path = (fs::path(cfg.out_dir) / "sweep.csv").string();
        std::ofstream sw(path);
        if (!sw) throw std::runtime_error("cannot write " + path);
        for (size_t c = 0; c < rows.front().cells.size(); ++c) {
            sw << (c ? "," : "") << rows.front().cells[c].first;
        }
        sw << "\n";
        for (const auto& r : rows) {
            for (size_t c = 0; c < r.cells.size(); ++c) {
                sw << (c ? "," : "") << fmt_double(r.cells[c].second);
            }
            sw << "\n";
        }
        write_metadata((fs::path(cfg.out_dir) / "sweep.meta").string(), cfg);
        out.summary_file = path;
    } else if (cfg.solver == Solver::analytic) {
        // nothing extra: the single-run csv already carries the series
    }
    return out;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

std::vector<std::string> preset_names() {
    return {"phase-diagram", "fig2b", "fig2d", "fig2e", "fig2f", "fig3ab", "fig3cd",
            "entanglement"};
}

RunConfig preset(const std::string& name) {
    KeyValues kv;
    auto add = [&](const std::string& k, const std::string& v) { kv.emplace_back(k, v); };
    if (name == "phase-diagram") {
        add("L", "64");
        add("solver", "analytic");
        add("gamma", "0.1");
        add("kappa", "0.1");
        add("sweep.theta", "linspace(-pi,pi,101)");
        add("sweep.phi", "linspace(-pi,pi,101)");
        add("out_dir", "out/phase-diagram");
    } else if (name == "fig2b") {
        add("L", "256");
        add("solver", "analytic");
        add("theta", "pi/2");
        add("initial_state", "vacuum");
        add("t_max", "60");
        add("n_samples", "241");
        add("sweep.phi", "-pi/2,-pi/4,0,pi/4,pi/2");
        add("out_dir", "out/fig2b");
    } else if (name == "fig2d") {
        add("L", "40");
        add("solver", "gaussian");
        add("bc", "open");
        add("theta", "pi/2");
        add("phi", "pi/2");
        add("initial_state", "cdw");
        add("t_max", "40");
        add("n_samples", "161");
        add("out_dir", "out/fig2d");
    } else if (name == "fig2e") {
        add("L", "40");
        add("solver", "gaussian");
        add("bc", "open");
        add("theta", "-pi/2");
        add("phi", "pi/2");
        add("initial_state", "cdw");
        add("t_max", "40");
        add("n_samples", "161");
        add("out_dir", "out/fig2e");
    } else if (name == "fig2f") {
        add("L", "40");
        add("solver", "gaussian");
        add("bc", "open");
        add("theta", "pi/4");
        add("phi", "pi/2");
        add("initial_state", "domain-wall");
        add("t_max", "40");
        add("n_samples", "161");
        add("out_dir", "out/fig2f");
    } else if (name == "fig3ab") {
        // PBC relaxation from the empty chain, phi = -theta = pi/2.
        add("L", "12");
        add("solver", "trajectories");
        add("theta", "-pi/2");
        add("phi", "pi/2");
        add("initial_state", "vacuum");
        add("t_max", "30");
        add("n_samples", "121");
        add("n_trajectories", "200");
        add("sweep.delta", "0,0.5,1,2");
        add("out_dir", "out/fig3ab");
    } else if (name == "fig3cd") {
        // OBC charge-density-wave melting, theta = phi = pi/2.
        add("L", "12");
        add("solver", "trajectories");
        add("bc", "open");
        add("theta", "pi/2");
        add("phi", "pi/2");
        add("initial_state", "cdw");
        add("t_max", "30");
        add("n_samples", "121");
        add("n_trajectories", "200");
        add("sweep.delta", "0,2,8");
        add("out_dir", "out/fig3cd");
    } else if (name == "entanglement") {
        add("L", "12");
        add("solver", "trajectories");
        add("bc", "open");
        add("theta", "pi/2");
        add("phi", "pi/2");
        add("initial_state", "cdw");
        add("t_max", "30");
        add("n_samples", "61");
        add("n_trajectories", "200");
        add("sweep.delta", "0,2");
        add("out_dir", "out/entanglement");
    } else {
        throw ConfigError("unknown preset '" + name + "'; available: phase-diagram, fig2b, "
                          "fig2d, fig2e, fig2f, fig3ab, fig3cd, entanglement");
    }
    return make_config(kv);
}

}  // namespace nrchain::io
