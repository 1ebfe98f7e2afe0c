#include "lobexec_cli/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "lobexec/montecarlo.hpp"
#include "lobexec/oracle.hpp"
#include "lobexec/strategy.hpp"
#include "lobexec/valuation.hpp"
#include "lobexec_cli/config.hpp"

namespace lobexec::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// shared flags; negative / zero sentinels mean "not given"
struct Flags {
    std::string config;
    std::string out = ".";
    long long seed = -1;
    int threads = 0;
    double y0 = kNaN, z0 = kNaN;
    double dt_max = 0.0;
    double horizon = 1e6;
    std::size_t ny = 200, nz = 200;
    double dt = 0.0;
    double ymax = 0.0;
    std::size_t paths = 100000;
    double eps_trunc = 0.0;
    double mc_dt = 0.01;
    std::size_t points = 10000;
    double tol = 1e-8;
    std::size_t nodes = 2048;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// LF-only CSV with full precision numbers
class CsvWriter {
 public:
    CsvWriter(const fs::path& p, const std::string& header) : os_(p, std::ios::binary) {
        if (!os_) throw std::runtime_error("cannot write " + p.string());
        os_ << header << '\n';
    }
    template <class... T>
    void row(const T&... cells) {
        bool first = true;
        ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
        os_ << '\n';
    }

 private:
    static std::string cell(double v) { return fmt(v); }
    static std::string cell(const char* s) { return s; }
    static std::string cell(const std::string& s) { return s; }
    std::ofstream os_;
};

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_json(const fs::path& p, const json& j, std::ostream& out) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    const std::string text = j.dump(2);
    os << text << '\n';
    out << text << '\n';
}

struct Session {
    RunConfig cfg;
    Market market;
    BoundaryTable table;
    double y0, z0;
};

RunConfig load_config(const Flags& f) {
    RunConfig cfg = parse_config(f.config);
    if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
    if (f.threads > 0) cfg.threads = static_cast<unsigned>(f.threads);
    if (f.dt_max > 0.0) cfg.dt_max = f.dt_max;
    return cfg;
}

Session open_session(const Flags& f, double table_floor = 0.0) {
    RunConfig cfg = load_config(f);
    if (!std::isnan(f.y0)) {
        cfg.y0 = f.y0;
        cfg.origin["agent.y0"] = -2;
    }
    if (!std::isnan(f.z0)) {
        cfg.z0 = f.z0;
        cfg.origin["agent.z0"] = -2;
    }
    if (cfg.y0 < 0.0) throw ConfigError({{"--y0", 0, "position must be non-negative"}});
    if (cfg.z0 > 0.0) throw ConfigError({{"--z0", 0, "book state must be <= 0"}});
    Market m = build_market(cfg);
    TabulateOptions opts;
    opts.y_max = std::max({cfg.table_y_max(), table_floor, cfg.y0});
    opts.nodes = cfg.boundary_nodes;
    opts.threads = cfg.threads;
    BoundaryTable t = tabulate(m, opts);
    return {cfg, std::move(m), std::move(t), cfg.y0, cfg.z0};
}

fs::path out_dir(const Flags& f) {
    fs::path p(f.out);
    fs::create_directories(p);
    return p;
}

json market_meta(const Session& s) {
    return {{"levy", s.market.levy.describe()},
            {"book", s.market.book.describe()},
            {"resilience", s.market.resilience.describe()},
            {"A", s.market.A}};
}

void write_boundary_csv(const fs::path& p, const BoundaryTable& t) {
    CsvWriter csv(p, "y,beta_star,beta_lower,gamma_beta");
    for (std::size_t i = 0; i < t.y_grid().size(); ++i) {
        const double y = t.y_grid()[i];
        csv.row(y, t.beta_star()[i], t.beta_lower()[i], t.beta_star()[i] - y);
    }
}

SimulateOptions path_options(const Session& s, const Flags& f) {
    SimulateOptions o;
    o.dt_max = s.cfg.dt_max;
    o.horizon = f.horizon;
    o.path_tol = s.cfg.path_tol;
    return o;
}

int cmd_boundary(const Flags& f, std::ostream& out) {
    Flags g = f;
    Session s = open_session(g, f.ymax);
    const fs::path dir = out_dir(f);
    write_boundary_csv(dir / "boundary.csv", s.table);
    json j = market_meta(s);
    j["nodes"] = s.table.y_grid().size();
    j["y_max"] = s.table.y_max();
    j["ybar_A"] = num(s.table.ybar_A());
    j["zbar"] = s.table.zbar();
    j["beta_zero_plus"] = s.table.beta_zero_plus();
    j["csv"] = "boundary.csv";
    write_json(dir / "boundary.json", j, out);
    return kOk;
}

int cmd_strategy(const Flags& f, std::ostream& out) {
    Session s = open_session(f);
    const StrategyPath path = simulate(s.table, s.market, s.y0, s.z0, path_options(s, f));
    const AdmissibilityReport adm = verify_admissibility(path, s.market);
    const fs::path dir = out_dir(f);
    {
        CsvWriter csv(dir / "strategy.csv", "t,Y,Z,phase");
        for (const auto& p : path.samples) csv.row(p.t, p.y, p.z, phase_name(p.phase));
    }
    json j = market_meta(s);
    j["y0"] = s.y0;
    j["z0"] = s.z0;
    j["initial_block"] = path.initial_block;
    j["post_block_bid"] = s.cfg.b + s.market.book.psi(s.z0 - path.initial_block);
    j["wait_time"] = path.wait_time;
    j["t_bar"] = num(path.t_bar);
    j["total_impact_cost"] = impact_cost(path, s.market);
    j["risk_cost"] = risk_cost(path, s.market);
    j["j_path"] = performance(path, s.market);
    j["truncated_tail"] = path.truncated;
    j["horizon_reached"] = path.horizon_reached;
    j["admissible"] = adm.admissible;
    j["csv"] = "strategy.csv";
    write_json(dir / "strategy.json", j, out);
    return kOk;
}

json residual_summary(const HjbReport& r) {
    return {{"sell_region_max", std::max(r.sell_equality_max, r.sell_inequality_max)},
            {"wait_region_max", std::max(r.wait_equality_max, r.wait_inequality_max)}};
}

int cmd_value(const Flags& f, std::ostream& out) {
    Session s = open_session(f);
    Valuation val(s.market, s.table);
    const double v = val.value(s.y0, s.z0);
    const StrategyPath path = simulate(s.table, s.market, s.y0, s.z0, path_options(s, f));
    const double jp = performance(path, s.market);
    const auto pts = sample_solvency_region(s.table, s.table.y_max(), f.points, s.cfg.seed);
    const HjbReport rep = hjb_check(val, pts, s.cfg.threads);
    const UtilityForms u = utility(s.market, s.cfg.b, s.cfg.c, s.y0, s.z0, v);
    json j = {{"v_closed", v},
              {"j_path", jp},
              {"residuals", residual_summary(rep)},
              {"utility", {{"resting_book_form", num(u.resting)}, {"full_walk_form", num(u.walk)}}},
              {"y0", s.y0},
              {"z0", s.z0},
              {"points", rep.points}};
    write_json(out_dir(f) / "value.json", j, out);
    return kOk;
}

int cmd_hjb(const Flags& f, std::ostream& out) {
    Session s = open_session(f);
    Valuation val(s.market, s.table);
    const auto pts = sample_solvency_region(s.table, s.table.y_max(), f.points, s.cfg.seed);
    const HjbReport rep = hjb_check(val, pts, s.cfg.threads);
    json worst = json::array();
    for (const auto& w : rep.worst)
        worst.push_back({{"y", w.y},
                         {"z", w.z},
                         {"region", w.sell_region ? "sell" : "wait"},
                         {"equality", w.equality},
                         {"inequality", w.inequality}});
    const double worst_all = std::max({rep.sell_equality_max, rep.sell_inequality_max, rep.wait_equality_max,
                                       rep.wait_inequality_max});
    json j = {{"residuals", residual_summary(rep)},
              {"sell_equality_max", rep.sell_equality_max},
              {"sell_inequality_max", rep.sell_inequality_max},
              {"wait_equality_max", rep.wait_equality_max},
              {"wait_inequality_max", rep.wait_inequality_max},
              {"points", rep.points},
              {"sell_points", rep.sell_points},
              {"tolerance", f.tol},
              {"within_tolerance", worst_all <= f.tol},
              {"worst", worst}};
    write_json(out_dir(f) / "hjb.json", j, out);
    return kOk;
}

int cmd_oracle(const Flags& f, std::ostream& out) {
    GridSpec g;
    g.n_y = f.ny;
    g.n_z = f.nz;
    g.dt = f.dt;
    if (f.ymax > 0.0) g.y_max = f.ymax;
    Session s = open_session(f, g.y_max);
    const DpResult r = solve_dp(s.market, g);
    Valuation val(s.market, s.table);
    const fs::path dir = out_dir(f);
    double max_diff = 0.0, frontier_cells = 0.0;
    {
        CsvWriter csv(dir / "oracle_grid.csv", "y,z,v_hat,action,v_closed,abs_diff");
        for (std::size_t i = 0; i <= r.n_y(); ++i)
            for (std::size_t j = 0; j <= r.n_z(); ++j) {
                const double y = r.y(i), z = r.z(j), vh = r.value(i, j);
                double vc = kNaN;
                if (s.table.solvent(y, z)) vc = val.value(y, z);
                const double d = std::abs(vh - vc);
                if (i > 0 && j < r.n_z() && std::isfinite(d)) max_diff = std::max(max_diff, d);
                csv.row(y, z, vh, r.sells(i, j) ? "sell" : "wait", vc, d);
            }
    }
    {
        CsvWriter csv(dir / "oracle_frontier.csv", "y,dp_frontier,beta");
        for (std::size_t i = 1; i <= r.n_y(); ++i) {
            const double fr = r.sell_frontier(i), b = s.table.beta(r.y(i));
            if (!std::isnan(fr)) frontier_cells = std::max(frontier_cells, std::abs(fr - b) / r.q());
            csv.row(r.y(i), fr, b);
        }
    }
    json j = {{"n_y", r.n_y()},
              {"n_z", r.n_z()},
              {"q", r.q()},
              {"dt", r.dt()},
              {"bellman_residual", r.residual},
              {"max_abs_diff_interior", max_diff},
              {"frontier_max_cells", frontier_cells}};
    if (s.y0 <= g.y_max && s.z0 >= r.z(r.n_z())) {
        const StrategyPath path = simulate(s.table, s.market, s.y0, s.z0, path_options(s, f));
        const auto i = static_cast<std::size_t>(std::lround(s.y0 / r.q()));
        const auto k = static_cast<std::size_t>(std::lround(-s.z0 / r.q()));
        j["start"] = {{"y", r.y(i)},
                      {"z", r.z(k)},
                      {"v_hat", r.value(i, k)},
                      {"v_closed", val.value(r.y(i), r.z(k))},
                      {"policy_cost", policy_cost(path, s.market, g)}};
    }
    write_json(dir / "oracle.json", j, out);
    return kOk;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
    Session s = open_session(f);
    Valuation val(s.market, s.table);
    const double v = val.value(s.y0, s.z0);
    const UtilityForms u = utility(s.market, s.cfg.b, s.cfg.c, s.y0, s.z0, v);
    const StrategyPath path = simulate(s.table, s.market, s.y0, s.z0, path_options(s, f));
    const double eps = f.eps_trunc > 0.0 ? f.eps_trunc : choose_truncation(s.market.levy, s.market.A, std::max(s.y0, 1.0));
    const double t_end = std::isfinite(path.t_bar) ? path.t_bar : path.t_end;
    const auto grid = make_time_grid(t_end, f.mc_dt, {path.wait_time});
    PathSampler sampler(s.market.levy, grid, eps, s.cfg.seed);
    const UtilityEstimate e = estimate_utility(path, s.market, sampler, s.cfg.c, s.cfg.b, f.paths, s.cfg.threads);
    auto z = [&](double closed) { return std::isfinite(closed) ? (e.mean - closed) / e.stderr_ : kNaN; };
    json j = {{"mc_mean", e.mean},
              {"mc_stderr", e.stderr_},
              {"closed_form_resting_book", num(u.resting)},
              {"closed_form_full_walk", num(u.walk)},
              {"z_scores", {{"resting_book_form", num(z(u.resting))}, {"full_walk_form", num(z(u.walk))}}},
              {"log_mc_mean", e.log_mean},
              {"log_mc_stderr", e.log_stderr},
              {"mean_gain", e.mean_gain},
              {"expected_gain", e.expected_gain},
              {"gain_stderr", e.gain_stderr},
              {"clamped", e.clamped},
              {"paths", e.paths},
              {"seed", s.cfg.seed},
              {"eps_trunc", eps},
              {"dt", f.mc_dt}};
    write_json(out_dir(f) / "simulate.json", j, out);
    return kOk;
}

// the published example: block book n = 1000, exponential resilience 5, common drift
int cmd_figure2(const Flags& f, std::ostream& out) {
    const double mu = -0.0018, sigma2 = 4.011e-4, n = 1000.0, lambda = 5.0, y_max = f.ymax > 0.0 ? f.ymax : 1e4;
    const VarianceGammaParams vg{0.02, 0.6, -0.002};
    const fs::path dir = out_dir(f);
    json j = json::object();
    for (const char* model : {"bm", "lvg"}) {
        for (const double A : {1e-3, 1e-2}) {
            const bool bm = std::string(model) == "bm";
            Market m{bm ? LevyModel(mu, sigma2) : LevyModel(mu, 0.0, LinearVarianceGamma{vg}),
                     BookShape::block(n, -1.0), Resilience::exponential(lambda), A};
            TabulateOptions o;
            o.y_max = y_max;
            o.nodes = f.nodes;
            o.threads = f.threads > 0 ? static_cast<unsigned>(f.threads) : 1;
            const BoundaryTable t = tabulate(m, o);
            const std::string name = std::string("figure2_") + model + "_A" + (A < 5e-3 ? "1e-3" : "1e-2") + ".csv";
            write_boundary_csv(dir / name, t);
            const InitialAction act = initial_action(t, m.resilience, y_max, 0.0);
            const double block = act.kind == InitialAction::Kind::Block ? act.amount : 0.0;
            j[name] = {{"beta_at_y_max", t.beta(y_max)},
                       {"initial_block_at_y_max", block},
                       {"post_block_bid", 1.0 + m.book.psi(-block)}};
        }
    }
    write_json(dir / "figure2.json", j, out);
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimal liquidation against a resilient limit order book", "lobexec"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&](CLI::App* sc, bool config) {
        if (config) sc->add_option("--config", f.config, "run configuration file")->required();
        sc->add_option("--out", f.out, "output directory");
        sc->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    };
    auto state = [&](CLI::App* sc) {
        sc->add_option("--y0", f.y0, "initial position (overrides agent.y0)");
        sc->add_option("--z0", f.z0, "initial book state (overrides agent.z0)");
        sc->add_option("--dt-max", f.dt_max, "largest output spacing along the path");
        sc->add_option("--horizon", f.horizon, "stop following the boundary at this time");
    };

    auto* boundary = app.add_subcommand("boundary", "tabulate the intervention boundary");
    common(boundary, true);
    boundary->add_option("--ymax", f.ymax, "largest position in the table");

    auto* strategy = app.add_subcommand("strategy", "follow the boundary from the starting state");
    common(strategy, true);
    state(strategy);

    auto* value = app.add_subcommand("value", "closed-form value, path performance and utility");
    common(value, true);
    state(value);
    value->add_option("--points", f.points, "HJB sample size");
    value->add_option("--seed", f.seed, "sampling seed");

    auto* hjb = app.add_subcommand("hjb-check", "HJB residuals on random states");
    common(hjb, true);
    hjb->add_option("--points", f.points, "sample size");
    hjb->add_option("--seed", f.seed, "sampling seed");
    hjb->add_option("--tol", f.tol, "residual tolerance");

    auto* oracle = app.add_subcommand("oracle", "brute-force dynamic programming cross-check");
    common(oracle, true);
    state(oracle);
    oracle->add_option("--ny", f.ny, "position cells")->check(CLI::Range(2, 1 << 16));
    oracle->add_option("--nz", f.nz, "book-state cells")->check(CLI::Range(2, 1 << 16));
    oracle->add_option("--dt", f.dt, "wait step (0 picks one cell of recovery)");
    oracle->add_option("--ymax", f.ymax, "largest position on the grid");

    auto* sim = app.add_subcommand("simulate", "Monte Carlo utility of the boundary strategy");
    common(sim, true);
    state(sim);
    sim->add_option("--paths", f.paths, "number of price paths")->check(CLI::Range(2, 1 << 30));
    sim->add_option("--seed", f.seed, "random seed");
    sim->add_option("--eps-trunc", f.eps_trunc, "jump truncation (0 picks one)");
    sim->add_option("--dt", f.mc_dt, "time step")->check(CLI::PositiveNumber);

    auto* fig = app.add_subcommand("reproduce-figure2", "boundaries of the published example");
    common(fig, false);
    fig->add_option("--ymax", f.ymax, "largest position (default 1e4)");
    fig->add_option("--nodes", f.nodes, "table nodes")->check(CLI::Range(16, 1 << 20));

    if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
        bool known = false;
        for (const auto* sc : app.get_subcommands({}))
            known = known || sc->get_name() == args[0];
        if (!known) {
            err << "error: unknown subcommand '" << args[0] << "'\n\n" << app.help();
            return kValidation;
        }
    }
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kValidation;
    }

    try {
        if (*boundary) return cmd_boundary(f, out);
        if (*strategy) return cmd_strategy(f, out);
        if (*value) return cmd_value(f, out);
        if (*hjb) return cmd_hjb(f, out);
        if (*oracle) return cmd_oracle(f, out);
        if (*sim) return cmd_simulate(f, out);
        if (*fig) return cmd_figure2(f, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
    err << app.help();
    return kValidation;
}

}  // namespace lobexec::cli
