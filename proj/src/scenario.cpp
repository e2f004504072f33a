#include "kflow/scenario.hpp"

#include "kflow/geometry.hpp"
#include "kflow/morse.hpp"
#include "kflow/structure.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace kflow::scenario {

using nlohmann::json;

namespace {

Matrix parse_matrix(const json& j, int n, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        throw std::invalid_argument("scenario: " + what + " must be an " + std::to_string(n) +
                                    "x" + std::to_string(n) + " array");
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw std::invalid_argument("scenario: ragged rows in " + what);
        for (int c = 0; c < n; ++c) m(i, c) = row[c].get<double>();
    }
    return m;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json diagonal_json(const Matrix& m) {
    json d = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) d.push_back(m(i, i));
    return d;
}

// Signed permutation as 1-based signed column images, e.g. [1,-3,2].
json signed_perm_json(const structure::SignedPermutation& u) {
    json a = json::array();
    for (int j = 0; j < u.size(); ++j) a.push_back(u.sign(j) * (u.perm(j) + 1));
    return a;
}

std::string label_token(const structure::SignedPermutation& u) {
    std::string s;
    for (int j = 0; j < u.size(); ++j) {
        s += u.sign(j) > 0 ? '+' : '-';
        s += std::to_string(u.perm(j) + 1);
    }
    return s;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario: JSON parse error: ") + e.what());
    }
    static const std::set<std::string> allowed = {
        "n",       "time",          "generator", "jordan", "k0",
        "gridResolution", "horizon", "tolerances", "outputDir", "seed"};
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw std::invalid_argument("scenario: unknown key '" + key + "'");

    Scenario s;
    if (!j.contains("n") || !j.contains("time") || !j.contains("generator"))
        throw std::invalid_argument("scenario: need keys n, time, generator");
    s.n = j["n"].get<int>();
    if (s.n < 2 || s.n > 8) throw std::invalid_argument("scenario: n must be in [2, 8]");
    const std::string time = j["time"].get<std::string>();
    if (time == "discrete")
        s.mode = jordan::TimeMode::discrete;
    else if (time == "continuous")
        s.mode = jordan::TimeMode::continuous;
    else
        throw std::invalid_argument("scenario: time must be 'discrete' or 'continuous'");
    s.generator = parse_matrix(j["generator"], s.n, "generator");

    if (j.contains("jordan")) {
        const auto& jj = j["jordan"];
        static const std::set<std::string> jkeys = {"e", "h", "u"};
        for (const auto& [key, value] : jj.items())
            if (!jkeys.count(key))
                throw std::invalid_argument("scenario: unknown jordan key '" + key + "'");
        if (!jj.contains("e") || !jj.contains("h") || !jj.contains("u"))
            throw std::invalid_argument("scenario: jordan needs e, h, u");
        s.jordan_e = parse_matrix(jj["e"], s.n, "jordan.e");
        s.jordan_h = parse_matrix(jj["h"], s.n, "jordan.h");
        s.jordan_u = parse_matrix(jj["u"], s.n, "jordan.u");
    }
    if (j.contains("k0")) s.k0 = parse_matrix(j["k0"], s.n, "k0");
    if (j.contains("gridResolution")) {
        s.grid_resolution = j["gridResolution"].get<int>();
        if (s.grid_resolution < 2) throw std::invalid_argument("scenario: gridResolution < 2");
    }
    if (j.contains("horizon")) {
        s.horizon = j["horizon"].get<double>();
        if (*s.horizon <= 0) throw std::invalid_argument("scenario: horizon must be positive");
    }
    if (j.contains("tolerances")) {
        static const std::set<std::string> tkeys = {"eps_det",  "eps_orth",  "eps_fix",
                                                    "eps_grad", "eps_recon", "delta_fd"};
        for (const auto& [key, value] : j["tolerances"].items()) {
            if (!tkeys.count(key))
                throw std::invalid_argument("scenario: unknown tolerance key '" + key + "'");
            const double v = value.get<double>();
            if (key == "eps_det") s.tol.eps_det = v;
            else if (key == "eps_orth") s.tol.eps_orth = v;
            else if (key == "eps_fix") s.tol.eps_fix = v;
            else if (key == "eps_grad") s.tol.eps_grad = v;
            else if (key == "eps_recon") s.tol.eps_recon = v;
            else s.tol.delta_fd = v;
        }
        s.tol.validate();
    }
    if (j.contains("outputDir")) s.output_dir = j["outputDir"].get<std::string>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("scenario: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

jordan::FlowSpec build_flow(const Scenario& s) {
    if (s.jordan_e) {
        // Validate the hint: factors commute and reproduce the generator
        // (discrete) or its time-one element (continuous).
        jordan::JordanTriple hint;
        hint.e = *s.jordan_e;
        hint.h = *s.jordan_h;
        hint.u = *s.jordan_u;
        const Matrix reference = s.mode == jordan::TimeMode::discrete
                                     ? s.generator
                                     : linalg::expm(s.generator);
        const auto res = jordan::triple_residuals(hint, reference);
        if (res.commutation > 1e-8 || res.product > 1e-7 || res.unipotent > 1e-8)
            throw IllConditioned("scenario: jordan hint inconsistent with the generator");
    }
    return jordan::make_flow(s.mode, s.generator, s.tol);
}

std::string trajectory_csv(const flow::Trajectory& tr) {
    std::string out = "time";
    const auto n = tr.samples.empty() ? 0 : tr.samples[0].rows();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out += ",k" + std::to_string(i) + std::to_string(j);
    out += "\n";
    for (size_t s = 0; s < tr.samples.size(); ++s) {
        out += format_double(tr.times[s]);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) out += "," + format_double(tr.samples[s](i, j));
        out += "\n";
    }
    return out;
}

std::string chain_json(const flow::Chain& chain) {
    json j;
    j["epsilon"] = chain.epsilon;
    j["T"] = chain.min_time;
    j["times"] = chain.times;
    json pts = json::array();
    for (const auto& p : chain.points) pts.push_back(matrix_json(p));
    j["points"] = pts;
    return j.dump(2) + "\n";
}

std::string morse_report_json(const jordan::FlowSpec& flow) {
    json j;
    j["H"] = diagonal_json(flow.triple.H);
    j["mu"] = flow.mu ? json(*flow.mu) : json(nullptr);
    json cosets = json::array();
    for (const auto& label : morse::morse_components(flow)) {
        json c;
        c["representative"] = signed_perm_json(label.coset.representative);
        c["attractor"] = label.is_attractor;
        c["repeller"] = label.is_repeller;
        c["components"] = label.component_count;
        c["dimension"] = label.dimension;
        cosets.push_back(c);
    }
    j["cosets"] = cosets;
    json rec = json::array();
    for (const auto& p : morse::recurrent_points(flow)) rec.push_back(matrix_json(p.mat()));
    j["recurrentPoints"] = rec;
    return j.dump(2) + "\n";
}

std::string decompose_report_json(const jordan::FlowSpec& flow) {
    json j;
    j["n"] = flow.dim();
    j["time"] = flow.mode == jordan::TimeMode::discrete ? "discrete" : "continuous";
    j["H"] = diagonal_json(flow.triple.H);
    j["mu"] = flow.mu ? json(*flow.mu) : json(nullptr);
    j["cg"] = signed_perm_json(flow.cg);
    j["e"] = matrix_json(flow.triple.e);
    j["h"] = matrix_json(flow.triple.h);
    j["u"] = matrix_json(flow.triple.u);
    j["q"] = matrix_json(flow.triple.q);
    if (flow.additive) {
        j["additive"] = {{"E", matrix_json(flow.additive->E)},
                         {"H", matrix_json(flow.additive->H)},
                         {"N", matrix_json(flow.additive->N)}};
    }
    return j.dump(2) + "\n";
}

namespace {

Matrix circle_point(double alpha) {
    Matrix k(2, 2);
    k << std::cos(alpha), -std::sin(alpha), std::sin(alpha), std::cos(alpha);
    return k;
}

Matrix euler_zyz(double a, double b, double c) {
    auto rz = [](double t) {
        Matrix m = Matrix::Identity(3, 3);
        m(0, 0) = std::cos(t);
        m(0, 1) = -std::sin(t);
        m(1, 0) = std::sin(t);
        m(1, 1) = std::cos(t);
        return m;
    };
    auto ry = [](double t) {
        Matrix m = Matrix::Identity(3, 3);
        m(0, 0) = std::cos(t);
        m(0, 2) = std::sin(t);
        m(2, 0) = -std::sin(t);
        m(2, 2) = std::cos(t);
        return m;
    };
    return rz(a) * ry(b) * rz(c);
}

std::string basin_label(const std::optional<morse::MorseLabel>& l) {
    return l ? label_token(l->coset.representative) : "unresolved";
}

}  // namespace

std::string basin_map_csv(const jordan::FlowSpec& flow, int grid_resolution, double horizon) {
    const int n = flow.dim();
    if (n > 3)
        throw std::invalid_argument("basin_map_csv: grids are provided for n <= 3 only");
    std::string out;
    const double two_pi = 2.0 * M_PI;
    if (n == 2) {
        out = "index,alpha,forward,backward\n";
        for (int i = 0; i < grid_resolution; ++i) {
            const double alpha = two_pi * i / grid_resolution;
            const auto basins =
                morse::classify_basin(flow, CompactPoint(circle_point(alpha)), 1e-6, horizon);
            out += std::to_string(i) + "," + format_double(alpha) + "," +
                   basin_label(basins.forward) + "," + basin_label(basins.backward) + "\n";
        }
        return out;
    }
    out = "index,psi,theta,phi,forward,backward\n";
    int index = 0;
    for (int i = 0; i < grid_resolution; ++i)
        for (int jth = 0; jth < grid_resolution; ++jth)
            for (int l = 0; l < grid_resolution; ++l) {
                const double a = two_pi * i / grid_resolution;
                const double b = M_PI * jth / grid_resolution;
                const double c = two_pi * l / grid_resolution;
                const auto basins =
                    morse::classify_basin(flow, CompactPoint(euler_zyz(a, b, c)), 1e-6, horizon);
                out += std::to_string(index++) + "," + format_double(a) + "," + format_double(b) +
                       "," + format_double(c) + "," + basin_label(basins.forward) + "," +
                       basin_label(basins.backward) + "\n";
            }
    return out;
}

std::string rate_report_json(const jordan::FlowSpec& flow, double horizon) {
    json j;
    j["mu"] = flow.mu ? json(*flow.mu) : json(nullptr);
    json violations = json::array();
    double lm = -std::numeric_limits<double>::infinity();
    double lp = std::numeric_limits<double>::infinity();
    double nu = 0.0, c = 1.0;
    for (const auto& label : morse::morse_components(flow)) {
        const CompactPoint x(label.coset.representative.matrix());
        try {
            const auto split = geometry::tangent_splitting(x, flow.triple.H, flow);
            const auto est = geometry::rate_estimates(flow, split, horizon);
            lm = std::max(lm, est.lambda_minus);
            lp = std::min(lp, est.lambda_plus);
            nu = std::max(nu, est.nu);
            c = std::max(c, est.c);
        } catch (const BoundViolated& e) {
            violations.push_back(std::string(e.what()));
        }
    }
    j["lambdaMinus"] = std::isfinite(lm) ? json(lm) : json(nullptr);
    j["lambdaPlus"] = std::isfinite(lp) ? json(lp) : json(nullptr);
    j["nu"] = nu;
    j["c"] = c;
    j["violations"] = violations;
    return j.dump(2) + "\n";
}

namespace {

void write_or_print(const std::string& content, const std::string& dir, const std::string& name,
                    std::ostream& out) {
    if (dir.empty()) {
        out << content;
        return;
    }
    std::filesystem::create_directories(dir);
    std::ofstream f(std::filesystem::path(dir) / name);
    f << content;
}

}  // namespace

int run_decompose(const Scenario& s, std::ostream& out, std::ostream& err) {
    try {
        const auto flow = build_flow(s);
        write_or_print(decompose_report_json(flow), s.output_dir, "decompose.json", out);
        return 0;
    } catch (const std::exception& e) {
        err << "decompose: " << e.what() << "\n";
        return 2;
    }
}

int run_morse(const Scenario& s, std::ostream& out, std::ostream& err) {
    try {
        const auto flow = build_flow(s);
        write_or_print(morse_report_json(flow), s.output_dir, "morse.json", out);
        return 0;
    } catch (const std::exception& e) {
        err << "morse: " << e.what() << "\n";
        return 2;
    }
}

int run_simulate(const Scenario& s, std::ostream& out, std::ostream& err) {
    try {
        const auto flow = build_flow(s);
        const double horizon = s.horizon.value_or(40.0);
        if (s.k0) {
            const flow::Trajectory tr = flow::trajectory(flow, CompactPoint(*s.k0, s.tol), horizon);
            write_or_print(trajectory_csv(tr), s.output_dir, "trajectory.csv", out);
        } else {
            const std::string map =
                basin_map_csv(flow, s.grid_resolution, std::max(horizon, 1000.0));
            write_or_print(map, s.output_dir, "basin_map.csv", out);
        }
        return 0;
    } catch (const std::exception& e) {
        err << "simulate: " << e.what() << "\n";
        return 2;
    }
}

namespace {

struct CheckList {
    std::ostream& out;
    int failures = 0;

    void check(const std::string& name, bool ok) {
        out << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
        if (!ok) ++failures;
    }
};

}  // namespace

int run_verify(const Scenario& s, std::ostream& out, std::ostream& err) {
    jordan::FlowSpec flow;
    try {
        flow = build_flow(s);
    } catch (const std::exception& e) {
        err << "verify: " << e.what() << "\n";
        return 2;
    }

    try {
        CheckList checks{out};
        const int n = flow.dim();
        const TolerancePolicy& tol = flow.tol;
        std::mt19937_64 rng(s.seed);

        // Factorization of the generator reconstructs.
        if (flow.mode == jordan::TimeMode::discrete) {
            const auto fac = linalg::iwasawa_project(flow.generator, tol);
            checks.check("iwasawa reconstruction of the generator",
                         max_norm(fac.k * fac.a * fac.n - flow.generator) <= tol.eps_recon);
        } else {
            const Matrix g1 = linalg::expm(flow.generator);
            const auto fac = linalg::iwasawa_project(g1, tol);
            checks.check("iwasawa reconstruction of exp(generator)",
                         max_norm(fac.k * fac.a * fac.n - g1) <= tol.eps_recon);
        }

        // Triple invariants in the adapted frame.
        const Matrix reference = flow.triple.e * flow.triple.h * flow.triple.u;
        const auto res = jordan::triple_residuals(flow.triple, reference);
        checks.check("jordan factors commute", res.commutation <= 1e-9);
        checks.check("unipotent factor is nilpotent", res.unipotent <= 1e-9);
        checks.check("elliptic factor orthogonal", res.elliptic_orth <= 1e-7);
        const Matrix g_ad =
            flow.triple.q * (flow.mode == jordan::TimeMode::discrete
                                 ? flow.generator
                                 : linalg::expm(flow.generator)) *
            flow.triple.q.inverse();
        checks.check("adapted factors reproduce the conjugated generator",
                     max_norm(reference - g_ad) <= 1e-7 * std::max(1.0, max_norm(g_ad)));

        if (flow.mode == jordan::TimeMode::continuous) {
            bool ok = true;
            for (double t : {0.5, 1.0, 2.0}) {
                const Matrix lhs = linalg::expm(t * flow.adapted_generator);
                const Matrix rhs = flow.element_at(t);
                if (max_norm(lhs - rhs) > 1e-8 * std::max(1.0, max_norm(lhs))) ok = false;
            }
            checks.check("exp(tX) splits through the additive parts", ok);
        }

        // Action semigroup property on sampled points.
        {
            bool ok = true;
            for (int trial = 0; trial < 5; ++trial) {
                const CompactPoint k(linalg::random_special_orthogonal(n, rng));
                const Matrix a = linalg::random_unimodular(n, rng);
                const Matrix b = linalg::random_unimodular(n, rng);
                const CompactPoint lhs = flow::act(a, flow::act(b, k, tol), tol);
                const CompactPoint rhs = flow::act(a * b, k, tol);
                if (distance(lhs, rhs) > tol.eps_fix) ok = false;
            }
            checks.check("kappa action is a semigroup action", ok);
        }

        const bool h_zero = !flow.mu.has_value();
        if (!h_zero) {
            const Matrix& H = flow.triple.H;
            const double mu = *flow.mu;

            {
                bool ok = true;
                for (const auto& y :
                     structure::subalgebra_basis(structure::SubalgebraKind::n_minus_H, n, &H)) {
                    for (double t : {1.0, 2.0, 4.0}) {
                        const Matrix ad = flow.hyperbolic_at(t) * y * flow.hyperbolic_at(-t);
                        if (ad.norm() > std::exp(-mu * t) * y.norm() + 1e-12) ok = false;
                    }
                }
                checks.check("hyperbolic decay bound on n^-_H", ok);
            }

            {
                const auto labels = morse::morse_components(flow);
                const auto ch = structure::enumerate_CH(H);
                const auto c_group = structure::enumerate_C(n);
                int attractors = 0;
                for (const auto& l : labels) attractors += l.is_attractor ? 1 : 0;
                size_t chg_size = ch.size();
                if (!std::binary_search(ch.begin(), ch.end(), flow.cg)) chg_size *= 2;
                checks.check("attractor components enumerated by C_H^g \\ C",
                             attractors == static_cast<int>(c_group.size() / chg_size));
            }

            {
                bool ok = true;
                const auto labels = morse::morse_components(flow);
                for (const auto& label : labels) {
                    const CompactPoint x(label.coset.representative.matrix());
                    const CompactPoint gx = flow::act(flow.element_at(1.0), x, tol,
                                                      linalg::DetCheck::off);
                    const auto dest = morse::fixed_component_of(gx, H, tol);
                    if (!dest) {
                        ok = false;
                        continue;
                    }
                    const auto expected = structure::coset_representative(
                        flow.cg.compose(label.coset.representative),
                        structure::enumerate_UH(H));
                    if (!(dest->representative == expected)) ok = false;
                }
                checks.check("time-one map shifts components by c_g", ok);
            }

            {
                const auto spec = geometry::MetricSpec::standard(n);
                bool ok = true;
                for (int trial = 0; trial < 10; ++trial) {
                    const CompactPoint k(linalg::random_special_orthogonal(n, rng));
                    if (geometry::gradient_residual(H, spec, k, tol) > tol.eps_grad) ok = false;
                }
                checks.check("hyperbolic flow is the B-gradient of the height", ok);

                bool mono = true;
                for (int trial = 0; trial < 3; ++trial) {
                    const CompactPoint k(linalg::random_special_orthogonal(n, rng));
                    if (!geometry::monotonicity_check(H, spec, k, 40.0, tol)) mono = false;
                }
                checks.check("height nondecreasing along the hyperbolic flow", mono);
            }

            {
                bool ok = true;
                const auto rec = morse::recurrent_points(flow);
                for (const auto& p : rec)
                    if (!flow::is_recurrent(flow, p)) ok = false;
                checks.check("recurrent candidates pass the recurrence test", ok && !rec.empty());
            }
        } else {
            bool ok = true;
            for (int i = 0; i < 4; ++i) {
                const double alpha = 2.0 * M_PI * i / 4.0;
                Matrix k = Matrix::Identity(n, n);
                k(0, 0) = std::cos(alpha);
                k(0, 1) = -std::sin(alpha);
                k(1, 0) = std::sin(alpha);
                k(1, 1) = std::cos(alpha);
                try {
                    flow::build_chain(flow, CompactPoint(k), 0.1, 10.0);
                } catch (const KflowError&) {
                    ok = false;
                }
            }
            checks.check("chain transitivity samples (H = 0)", ok);
        }

        out << (checks.failures == 0 ? "verify: all checks passed\n"
                                     : "verify: " + std::to_string(checks.failures) +
                                           " check(s) failed\n");
        return checks.failures == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        err << "verify: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace kflow::scenario
