#include "ppr/experiments.hpp"

#include "ppr/config.hpp"
#include "ppr/errors.hpp"
#include "ppr/report.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace ppr {

namespace {

const std::set<std::string> kKnownKeys = {
    "name",          "resistance_ohm",     "inductance_h",      "kappa_per_s",
    "forcing_scale", "period_s",           "pwm_teeth",         "coarse_inputs",
    "coarse_input",  "fine_propagator",    "fine_step_exponent", "p_min",
    "p_max",         "tolerance",          "bound_depth",       "max_iterations",
    "initial_guess", "subintervals",       "steady_tol",        "max_periods",
    "parallel_accounting", "signal_plot_teeth", "output_dir",   "workers",
    "seed",
};

int to_int(long long v, const char* key) {
    if (v < -2147483647LL || v > 2147483647LL) {
        throw ConfigError(std::string("key '") + key + "' out of range");
    }
    return static_cast<int>(v);
}

/// Runs task(i) for i in [0, count) on up to `workers` threads.
template <typename Task>
void parallel_for(int count, int workers, const Task& task) {
    const int threads = std::clamp(workers, 1, std::max(1, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) {
            task(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < count; i += threads) {
                    task(i);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

PropagatorSpec coarse_spec_for(double dT) {
    PropagatorSpec spec;
    spec.kind = PropagatorKind::backward_euler;
    spec.substep = dT;
    return spec;
}

/// Reference values at the synchronization points, at the fine solver's
/// accuracy.
Eigen::MatrixXd periodic_reference(const ExperimentConfig& config,
                                   const LinearScalarProblem& problem, const Propagator& fine,
                                   const std::vector<double>& times) {
    if (config.fine_propagator == PropagatorKind::exact_linear) {
        return closed_form_periodic(problem.kappa, problem.forcing, problem.forcing_scale,
                                    problem.period)
            .sample(times);
    }
    return affine_periodic_reference(fine, problem.period, times);
}

}  // namespace

// --- ExperimentConfig ------------------------------------------------------

double ExperimentConfig::fine_step_s() const { return std::ldexp(period_s, -fine_step_exponent); }

double ExperimentConfig::kappa() const {
    return kappa_per_s.value_or(resistance_ohm / inductance_h);
}

double ExperimentConfig::scale() const { return forcing_scale.value_or(resistance_ohm); }

LinearScalarProblem ExperimentConfig::problem(CoarseKind coarse) const {
    LinearScalarProblem p;
    if (kappa_per_s || forcing_scale) {
        p.kappa = kappa();
        p.forcing_scale = scale();
        p.period = period_s;
        p.forcing = PwmSignal(period_s, pwm_teeth);
        p.smooth_forcing = SmoothCoarseInput(coarse, period_s);
        return p;
    }
    RLCircuitProblem rl;
    rl.resistance = resistance_ohm;
    rl.inductance = inductance_h;
    rl.period = period_s;
    rl.pwm = PwmSignal(period_s, pwm_teeth);
    rl.coarse_input = SmoothCoarseInput(coarse, period_s);
    return normalize_rl(rl);
}

PropagatorSpec ExperimentConfig::fine_spec() const {
    PropagatorSpec spec;
    spec.kind = fine_propagator;
    spec.substep = fine_step_s();
    return spec;
}

std::filesystem::path ExperimentConfig::resolved_output_dir() const {
    return output_dir.empty() ? std::filesystem::path("out") / name : output_dir;
}

void ExperimentConfig::validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError(what); };
    if (!(resistance_ohm > 0.0) || !(inductance_h > 0.0)) {
        fail("resistance_ohm and inductance_h must be positive");
    }
    if (kappa_per_s && !(*kappa_per_s > 0.0)) {
        fail("kappa_per_s must be positive");
    }
    if (!(period_s > 0.0)) {
        fail("period_s must be positive");
    }
    if (pwm_teeth < 1 || signal_plot_teeth < 1) {
        fail("PWM tooth counts must be positive");
    }
    if (coarse_inputs.empty()) {
        fail("coarse_inputs must list at least one input");
    }
    if (fine_step_exponent < 0 || fine_step_exponent > 40) {
        fail("fine_step_exponent must be in [0, 40]");
    }
    if (p_min < 0 || p_max < p_min) {
        fail("need 0 <= p_min <= p_max");
    }
    if (p_max >= fine_step_exponent) {
        fail("p_max must be below fine_step_exponent so the coarse step exceeds the fine step");
    }
    if (subintervals < 1 || std::ldexp(1.0, fine_step_exponent) / subintervals <
                                 1.0 - 1e-12) {
        fail("subintervals must be positive and no finer than the fine step");
    }
    const double per_sub = std::ldexp(1.0, fine_step_exponent) / subintervals;
    if (std::abs(per_sub - std::round(per_sub)) > 1e-9) {
        fail("subintervals must divide 2^fine_step_exponent");
    }
    if (!(tolerance > 0.0) || !(steady_tol > 0.0)) {
        fail("tolerances must be positive");
    }
    if (bound_depth < 1 || max_iterations < 1 || max_periods < 1) {
        fail("bound_depth, max_iterations and max_periods must be positive");
    }
    if (workers < 1) {
        fail("workers must be at least 1");
    }
}

ExperimentConfig experiment_config_from(const KeyValueConfig& kv) {
    kv.require_known(kKnownKeys);
    ExperimentConfig c;
    try {
        if (auto v = kv.get_string("name")) c.name = *v;
        if (auto v = kv.get_double("resistance_ohm")) c.resistance_ohm = *v;
        if (auto v = kv.get_double("inductance_h")) c.inductance_h = *v;
        if (auto v = kv.get_double("kappa_per_s")) c.kappa_per_s = *v;
        if (auto v = kv.get_double("forcing_scale")) c.forcing_scale = *v;
        if (auto v = kv.get_double("period_s")) c.period_s = *v;
        if (auto v = kv.get_int("pwm_teeth")) c.pwm_teeth = to_int(*v, "pwm_teeth");
        if (auto v = kv.get_list("coarse_inputs")) {
            c.coarse_inputs.clear();
            for (const auto& s : *v) {
                c.coarse_inputs.push_back(parse_coarse_kind(s));
            }
        }
        if (auto v = kv.get_string("coarse_input")) c.coarse_input = parse_coarse_kind(*v);
        if (auto v = kv.get_string("fine_propagator")) {
            c.fine_propagator = parse_propagator_kind(*v);
        }
        if (auto v = kv.get_int("fine_step_exponent")) {
            c.fine_step_exponent = to_int(*v, "fine_step_exponent");
        }
        if (auto v = kv.get_int("p_min")) c.p_min = to_int(*v, "p_min");
        if (auto v = kv.get_int("p_max")) c.p_max = to_int(*v, "p_max");
        if (auto v = kv.get_double("tolerance")) c.tolerance = *v;
        if (auto v = kv.get_int("bound_depth")) c.bound_depth = to_int(*v, "bound_depth");
        if (auto v = kv.get_int("max_iterations")) {
            c.max_iterations = to_int(*v, "max_iterations");
        }
        if (auto v = kv.get_double("initial_guess")) c.initial_guess = *v;
        if (auto v = kv.get_int("subintervals")) c.subintervals = to_int(*v, "subintervals");
        if (auto v = kv.get_double("steady_tol")) c.steady_tol = *v;
        if (auto v = kv.get_int("max_periods")) c.max_periods = to_int(*v, "max_periods");
        if (auto v = kv.get_bool("parallel_accounting")) c.parallel_accounting = *v;
        if (auto v = kv.get_int("signal_plot_teeth")) {
            c.signal_plot_teeth = to_int(*v, "signal_plot_teeth");
        }
        if (auto v = kv.get_string("output_dir")) c.output_dir = *v;
        if (auto v = kv.get_int("workers")) c.workers = to_int(*v, "workers");
        if (auto v = kv.get_int("seed")) c.seed = static_cast<std::uint64_t>(*v);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return experiment_config_from(KeyValueConfig::load(path));
}

// --- sweep -----------------------------------------------------------------

SweepResult run_convergence_sweep(const ExperimentConfig& config) {
    config.validate();
    struct Point {
        int p;
        CoarseKind kind;
    };
    std::vector<Point> points;
    for (int p = config.p_min; p <= config.p_max; ++p) {
        for (CoarseKind kind : config.coarse_inputs) {
            points.push_back({p, kind});
        }
    }

    SweepResult result;
    result.rows.resize(points.size());
    parallel_for(static_cast<int>(points.size()), config.workers, [&](int i) {
        const Point pt = points[static_cast<std::size_t>(i)];
        const LinearScalarProblem problem = config.problem(pt.kind);
        const int n_sub = 1 << pt.p;
        const double dT = std::ldexp(config.period_s, -pt.p);

        PararealConfig pc;
        pc.subintervals = n_sub;
        pc.max_iterations = config.max_iterations;
        pc.tolerance = config.tolerance;
        pc.initial_guess = State::Constant(1, config.initial_guess);
        pc.fine_spec = config.fine_spec();
        pc.coarse_spec = coarse_spec_for(dT);

        const auto fine = make_fine_propagator(problem, pc.fine_spec);
        const auto coarse = make_coarse_propagator(problem, pc.coarse_spec);
        const PararealRun run = pp_ic_solve(*fine, *coarse, problem.period, pc);
        const Eigen::MatrixXd reference = periodic_reference(config, problem, *fine, run.times);

        SweepRow row;
        row.p = pt.p;
        row.dT_s = dT;
        row.coarse_kind = pt.kind;
        row.converged = run.converged_at.has_value();
        row.iterations = run.converged_at.value_or(run.last_iteration());
        row.initial_error = error_norm(run.iterate(0), reference);
        row.rho_num = (row.iterations >= 1)
                          ? rho_numerical(run, reference, row.iterations)
                          : 0.0;
        const double z = problem.kappa * dT;
        const double phi = stability_function_be(z);
        const double defect = std::exp(-z) - phi;
        const ContractionResult contraction = contraction_check(phi, z);
        row.contraction_margin = contraction.margin;
        row.x_bound = contraction.holds ? bound_xl(phi, defect, n_sub, config.bound_depth).back()
                                        : std::numeric_limits<double>::quiet_NaN();
        result.rows[static_cast<std::size_t>(i)] = row;
    });
    return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
    out << "# schema_version=" << kCsvSchemaVersion << '\n';
    write_csv_row(out, {"p", "dT_s", "coarse_kind", "iterations", "converged", "rho_num",
                        "x_bound", "contraction_margin"});
    for (const auto& r : result.rows) {
        write_csv_row(out, {std::to_string(r.p), format_double(r.dT_s),
                            std::string(to_string(r.coarse_kind)), std::to_string(r.iterations),
                            r.converged ? "1" : "0", format_double(r.rho_num),
                            format_double(r.x_bound), format_double(r.contraction_margin)});
    }
}

std::string render_sweep_svg(const SweepResult& result, int bound_depth) {
    PlotSeries sine{"rho_num (sine)", {}, {}, "#1f77b4", true};
    PlotSeries step{"rho_num (step)", {}, {}, "#d62728", true};
    PlotSeries bound{"x_" + std::to_string(bound_depth), {}, {}, "#2ca02c", true};
    for (const auto& r : result.rows) {
        auto& s = (r.coarse_kind == CoarseKind::sine) ? sine : step;
        s.x.push_back(r.dT_s);
        s.y.push_back(r.rho_num);
        if (bound.x.empty() || bound.x.back() != r.dT_s) {
            bound.x.push_back(r.dT_s);
            bound.y.push_back(r.x_bound);
        }
    }
    std::vector<PlotSeries> series;
    for (auto* s : {&sine, &step, &bound}) {
        if (!s->x.empty()) {
            series.push_back(*s);
        }
    }
    PlotSpec spec;
    spec.title = "Periodic Parareal convergence factor";
    spec.x_label = "coarse step dT [s]";
    spec.y_label = "convergence factor";
    spec.log_x = true;
    return render_line_plot(spec, series);
}

// --- costs -----------------------------------------------------------------

CostComparison run_cost_comparison(const ExperimentConfig& config) {
    config.validate();
    const LinearScalarProblem problem = config.problem(config.coarse_input);
    const PropagatorSpec fine_spec = config.fine_spec();
    const auto fine = make_fine_propagator(problem, fine_spec);
    const double T = problem.period;
    const int n_sub = config.subintervals;
    const double dT = T / n_sub;
    const auto coarse = make_coarse_propagator(problem, coarse_spec_for(dT));

    CostComparison out;
    out.oracle_state = periodic_reference(config, problem, *fine, {0.0})(0, 0);

    // (a) sequential time stepping from zero.
    out.sequential = sequential_steady_state(*fine, T, config.steady_tol, config.max_periods);
    const int periods = out.sequential.periods_used;
    out.sequential_start = out.sequential.period_starts[static_cast<std::size_t>(periods - 1)](0);
    out.sequential_end = out.sequential.final_state()(0);

    PararealConfig pc;
    pc.max_iterations = config.max_iterations;
    pc.tolerance = config.tolerance;
    pc.initial_guess = State::Constant(1, config.initial_guess);
    pc.fine_spec = fine_spec;
    pc.coarse_spec = coarse_spec_for(dT);
    pc.workers = config.workers;

    // (b) classical Parareal on [0, P T] with the same coarse step.
    PararealConfig classical_cfg = pc;
    classical_cfg.subintervals = n_sub * periods;
    classical_cfg.initial_guess = State::Zero(1);
    out.classical = classical_parareal_ivp_solve(*fine, *coarse, periods * T, classical_cfg);
    {
        const auto& last = out.classical.iterates.back();
        out.classical_start = last(0, static_cast<Eigen::Index>(n_sub) * (periods - 1));
        out.classical_end = out.classical.final_fine_state(0);
    }

    // (c) PP-IC on one period.
    pc.subintervals = n_sub;
    out.pp_ic = pp_ic_solve(*fine, *coarse, T, pc);
    out.pp_ic_start = out.pp_ic.iterates.back()(0, 0);
    out.pp_ic_end = out.pp_ic.iterates.back()(0, n_sub);

    const auto diff = [&](double a, double b) {
        return std::max(std::abs(a - out.oracle_state), std::abs(b - out.oracle_state));
    };
    const bool par = config.parallel_accounting;
    out.rows.push_back({"sequential", out.sequential.cost.effective_solves(),
                        out.sequential.cost.total_solves(), periods,
                        diff(out.sequential_start, out.sequential_end)});
    out.rows.push_back({"classical_parareal_ivp", out.classical.cost.effective_solves(par),
                        out.classical.cost.total_solves(),
                        out.classical.converged_at.value_or(out.classical.last_iteration()),
                        diff(out.classical_start, out.classical_end)});
    out.rows.push_back({"pp_ic", out.pp_ic.cost.effective_solves(par),
                        out.pp_ic.cost.total_solves(),
                        out.pp_ic.converged_at.value_or(out.pp_ic.last_iteration()),
                        diff(out.pp_ic_start, out.pp_ic_end)});
    return out;
}

void write_cost_csv(const CostComparison& result, std::ostream& out) {
    out << "# schema_version=" << kCsvSchemaVersion << '\n';
    write_csv_row(out, {"method", "effective_solves", "total_solves", "iterations_or_periods",
                        "end_state_diff_vs_oracle"});
    for (const auto& r : result.rows) {
        write_csv_row(out, {r.method, std::to_string(r.effective_solves),
                            std::to_string(r.total_solves), std::to_string(r.iterations_or_periods),
                            format_double(r.end_state_diff_vs_oracle)});
    }
}

std::string render_cost_svg(const CostComparison& result) {
    const std::vector<std::string> colors = {"#7f7f7f", "#ff7f0e", "#1f77b4"};
    std::vector<Bar> bars;
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        bars.push_back({result.rows[i].method,
                        static_cast<double>(result.rows[i].effective_solves),
                        colors[i % colors.size()]});
    }
    return render_bar_chart("Effective number of linear solves", "linear solves", bars, true);
}

// --- signals ---------------------------------------------------------------

std::vector<PlotSeries> signal_traces(const ExperimentConfig& config) {
    const double T = config.period_s;
    const PwmSignal pwm(T, config.signal_plot_teeth);
    const SmoothCoarseInput sine(CoarseKind::sine, T);
    const SmoothCoarseInput step(CoarseKind::step, T);

    PlotSeries pwm_series{"PWM (m=" + std::to_string(config.signal_plot_teeth) + ")", {}, {},
                          "#7f7f7f"};
    pwm_series.staircase = true;
    const auto& pieces = pwm.pieces();
    for (std::size_t j = 0; j < pieces.size(); ++j) {
        pwm_series.x.push_back(pieces.knots[j]);
        pwm_series.y.push_back(pieces.values[j]);
    }
    pwm_series.x.push_back(T);
    pwm_series.y.push_back(pieces.values.back());

    PlotSeries sine_series{"sine coarse input", {}, {}, "#1f77b4"};
    constexpr int kSamples = 400;
    for (int i = 0; i <= kSamples; ++i) {
        const double t = T * i / kSamples;
        sine_series.x.push_back(t);
        sine_series.y.push_back(sine(t));
    }
    PlotSeries step_series{"step coarse input", {0.0, 0.5 * T, 0.5 * T, T},
                           {step(0.0), step(0.5 * T), step(T), step(T)}, "#d62728"};

    return {pwm_series, sine_series, step_series};
}

std::string render_signals_svg(const ExperimentConfig& config) {
    PlotSpec spec;
    spec.title = "PWM excitation and coarse inputs";
    spec.x_label = "t [s]";
    spec.y_label = "input";
    return render_line_plot(spec, signal_traces(config));
}

// --- single ----------------------------------------------------------------

SingleRun run_single(const ExperimentConfig& config) {
    config.validate();
    const LinearScalarProblem problem = config.problem(config.coarse_input);
    const int n_sub = config.subintervals;
    const double dT = problem.period / n_sub;

    PararealConfig pc;
    pc.subintervals = n_sub;
    pc.max_iterations = config.max_iterations;
    pc.tolerance = config.tolerance;
    pc.initial_guess = State::Constant(1, config.initial_guess);
    pc.fine_spec = config.fine_spec();
    pc.coarse_spec = coarse_spec_for(dT);
    pc.workers = config.workers;

    const auto fine = make_fine_propagator(problem, pc.fine_spec);
    const auto coarse = make_coarse_propagator(problem, pc.coarse_spec);

    SingleRun out;
    out.run = pp_ic_solve(*fine, *coarse, problem.period, pc);
    out.reference = periodic_reference(config, problem, *fine, out.run.times);
    const int k = out.run.converged_at.value_or(out.run.last_iteration());
    if (k >= 1 && error_norm(out.run.iterate(0), out.reference) > 0.0) {
        out.rho_num = rho_numerical(out.run, out.reference, k);
    }
    const double z = problem.kappa * dT;
    const double phi = stability_function_be(z);
    const double defect = std::exp(-z) - phi;
    if (contraction_check(phi, z).holds) {
        out.x_bound = bound_xl(phi, defect, n_sub, config.bound_depth).back();
    }
    if (n_sub <= 1024) {
        SpectralRadiusOptions opts;
        opts.seed = config.seed;
        out.rho_asym = spectral_radius(build_S(n_sub, phi, defect).matrix, opts);
    }
    return out;
}

void write_iterates_csv(const SingleRun& result, std::ostream& out) {
    out << "# schema_version=" << kCsvSchemaVersion << '\n';
    write_csv_row(out, {"k", "n", "t_s", "U", "reference"});
    for (int k = 0; k <= result.run.last_iteration(); ++k) {
        const auto& u = result.run.iterate(k);
        for (Eigen::Index n = 0; n < u.cols(); ++n) {
            write_csv_row(out, {std::to_string(k), std::to_string(n),
                                format_double(result.run.times[static_cast<std::size_t>(n)]),
                                format_double(u(0, n)), format_double(result.reference(0, n))});
        }
    }
}

}  // namespace ppr
