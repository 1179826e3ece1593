// Experiment orchestration: executes a validated ExperimentConfig, writes
// every output atomically into the configured directory, and returns a run
// manifest listing each file with its checksum.
//
// Determinism contract: with a fixed config and seed all data outputs
// (CSV/JSON/field dumps) are byte-identical across reruns. The manifest
// echoes the config and the checksum inventory identically; its timing block
// is the one field that varies run to run.

#pragma once

#include <chrono>
#include <future>
#include <numbers>

#include "todalab/config.hpp"
#include "todalab/io.hpp"
#include "todalab/spectra.hpp"
#include "todalab/toda.hpp"

namespace todalab {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CertificateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ManifestFile {
    std::string path;   // relative to out_dir
    std::uint64_t bytes = 0;
    std::uint64_t fnv64 = 0;
};

struct RunManifest {
    ExperimentConfig config;
    std::string version = kArtifactVersion;
    std::vector<ManifestFile> files;
    std::vector<std::pair<std::string, double>> timings;  // stage -> seconds
    std::vector<double> lambda_final;
    std::vector<std::string> state_files;  // cache base names of the final state
    bool certificate_pass = true;
    std::string status = "ok";
};

namespace detail {

class OutputDir {
  public:
    explicit OutputDir(std::string dir) : dir_(std::move(dir)) {}

    void write(const std::string& rel, const std::string& bytes, RunManifest* man) {
        atomic_write(std::filesystem::path(dir_) / rel, bytes);
        man->files.push_back({rel, bytes.size(), fnv1a64(bytes)});
    }

    void write_field(const std::string& base, const FieldHeader& hdr, const Eigen::VectorXd& v,
                     RunManifest* man) {
        write_field_cache(std::filesystem::path(dir_) / base, hdr, v);
        for (const char* ext : {".json", ".bin"}) {
            const std::string rel = base + ext;
            const std::string bytes = read_file(std::filesystem::path(dir_) / rel);
            man->files.push_back({rel, bytes.size(), fnv1a64(bytes)});
        }
    }

    const std::string& dir() const { return dir_; }

  private:
    std::string dir_;
};

class Stopwatch {
  public:
    explicit Stopwatch(RunManifest* man, std::string stage)
        : man_(man), stage_(std::move(stage)), t0_(std::chrono::steady_clock::now()) {}
    ~Stopwatch() {
        const auto dt = std::chrono::steady_clock::now() - t0_;
        man_->timings.emplace_back(stage_, std::chrono::duration<double>(dt).count());
    }

  private:
    RunManifest* man_;
    std::string stage_;
    std::chrono::steady_clock::time_point t0_;
};

inline std::vector<WeightField> build_weights(const ExperimentConfig& c, const DomainGrid& grid,
                                              std::shared_ptr<const PoissonSolver> poisson) {
    GridField f = c.f_preset == "quadratic"
                      ? f_quadratic(grid, c.f_coeff, c.f_center_x, c.f_center_y)
                      : f_zero(grid);
    std::vector<SingularSource> sources;
    for (const SourceSpec& s : c.sources) sources.push_back(snap_source(grid, s.x, s.y, s.alpha));
    WeightField w = sources.empty() && c.f_preset == "zero" ? unit_weight(grid)
                                                            : assemble_weight(*poisson, f, sources);
    return std::vector<WeightField>(static_cast<size_t>(c.rank), w);
}

inline std::vector<double> resolve_lambda(const ExperimentConfig& c, const TodaProblem& p) {
    if (!c.lambda.empty()) return c.lambda;
    const double s = c.s.value_or(1.0);
    std::vector<double> lam(p.rank());
    const double box = 8.0 * std::numbers::pi / p.rho_s;
    for (int i = 0; i < p.rank(); ++i) lam[i] = s * box / p.d[i];
    return lam;
}

inline std::string cartan_record_json(const ThresholdReport& th, const SpectrumReport& spec) {
    JsonWriter jw;
    jw.begin_object();
    jw.key("family").value(std::string(1, family_letter(th.type.family)));
    jw.key("rank").value(th.type.rank);
    jw.key("rho").value(th.rho);
    jw.key("eigenvalues").begin_array();
    for (double e : spec.eigenvalues) jw.value(e);
    jw.end_array();
    jw.key("lambda_s_max").value(th.lambda_s_max);
    jw.key("lambda_max").begin_array();
    for (double l : th.lambda_max) jw.value(l);
    jw.end_array();
    jw.key("d").begin_array();
    for (const Rat& d : th.d) jw.value(d.get_d());
    jw.end_array();
    jw.end_object();
    return jw.str();
}

inline void append_certificate_columns(CsvWriter* csv, const EigenReport& rep, int n) {
    csv->cell(rep.coupled_min);
    csv->cell(rep.coupled_min_unconstrained);
    csv->cell(rep.coupled_min_constant_boundary);
    for (int i = 0; i < n; ++i) csv->cell(rep.mu1[i]);
    for (int i = 0; i < n; ++i) csv->cell(rep.mu2[i]);
    for (int i = 0; i < n; ++i) csv->cell(rep.nu1[i]);
    for (int i = 0; i < n; ++i) csv->cell(rep.nu2[i]);
    csv->cell(rep.margins_max);
    csv->cell(rep.certificate ? "true" : "false");
    csv->cell(rep.pass_boundary_layer ? "true" : "false");
}

inline std::vector<std::string> certificate_column_names(int n) {
    std::vector<std::string> cols{"coupled_min", "coupled_min_unconstrained",
                                  "coupled_min_constant_boundary"};
    for (const char* base : {"mu1_", "mu2_", "nu1_", "nu2_"})
        for (int i = 1; i <= n; ++i) cols.push_back(base + std::to_string(i));
    cols.push_back("margins_max");
    cols.push_back("certificate");
    cols.push_back("pass_boundary_layer");
    return cols;
}

inline std::string certificate_json(const EigenReport& rep) {
    JsonWriter jw;
    jw.begin_object();
    jw.key("rho").value(rep.rho);
    jw.key("coupled_min").value(rep.coupled_min);
    jw.key("coupled_min_unconstrained").value(rep.coupled_min_unconstrained);
    jw.key("coupled_min_constant_boundary").value(rep.coupled_min_constant_boundary);
    auto arr = [&jw](const char* key, const std::vector<double>& v) {
        jw.key(key).begin_array();
        for (double x : v) jw.value(x);
        jw.end_array();
    };
    arr("mu1", rep.mu1);
    arr("mu2", rep.mu2);
    arr("nu1", rep.nu1);
    arr("nu2", rep.nu2);
    arr("lambda_s", rep.lambda_s);
    arr("constraint_residuals", rep.constraint_residuals);
    jw.key("margins_max").value(rep.margins_max);
    jw.key("mass_identity_error").value(rep.mass_identity_error);
    jw.key("pass").value(rep.certificate);
    jw.key("pass_boundary_layer").value(rep.pass_boundary_layer);
    jw.key("inconclusive").value(rep.inconclusive);
    jw.end_object();
    return jw.str();
}

inline std::string eigen_table_csv(const EigenReport& rep) {
    CsvWriter csv({"component", "lambda_s", "mu1", "mu2", "nu1", "nu2", "mu2_boundary_constant",
                   "constraint_residual"});
    for (size_t i = 0; i < rep.mu1.size(); ++i) {
        csv.cell(static_cast<int>(i + 1));
        csv.cell(rep.lambda_s[i]);
        csv.cell(rep.mu1[i]);
        csv.cell(rep.mu2[i]);
        csv.cell(rep.nu1[i]);
        csv.cell(rep.nu2[i]);
        csv.cell(rep.mu2_c[i]);
        csv.cell(rep.constraint_residuals[i]);
        csv.end_row();
    }
    return csv.str();
}

inline void dump_state_fields(const ExperimentConfig& c, OutputDir* out, const TodaState& st,
                              RunManifest* man) {
    if (!c.dump_fields) return;
    for (size_t i = 0; i < st.u.size(); ++i) {
        FieldHeader hdr;
        hdr.n = st.u[i].n;
        hdr.kind = "field";
        hdr.extra["component"] = static_cast<double>(i + 1);
        hdr.extra["lambda"] = st.lambda[i];
        const std::string base = "u_" + std::to_string(i + 1);
        out->write_field(base, hdr, st.u[i].values, man);
        man->state_files.push_back(base);
        DomainGrid g = build_grid(st.u[i].n);
        out->write(base + ".xyz", xyz_export(g, st.u[i]), man);
    }
}

inline std::string manifest_json(const RunManifest& man) {
    JsonWriter jw;
    jw.begin_object();
    jw.key("magic").value("todalab-run");
    jw.key("version").value(man.version);
    jw.key("mode").value(to_string(man.config.mode));
    jw.key("status").value(man.status);
    jw.key("certificate_pass").value(man.certificate_pass);
    jw.key("config").value(serialize(man.config));
    jw.key("lambda_final").begin_array();
    for (double l : man.lambda_final) jw.value(l);
    jw.end_array();
    jw.key("state_files").begin_array();
    for (const std::string& s : man.state_files) jw.value(s);
    jw.end_array();
    jw.key("files").begin_array();
    for (const ManifestFile& f : man.files) {
        jw.begin_object();
        jw.key("path").value(f.path);
        jw.key("bytes").value(static_cast<unsigned long long>(f.bytes));
        jw.key("fnv64").value(static_cast<unsigned long long>(f.fnv64));
        jw.end_object();
    }
    jw.end_array();
    jw.key("timings").begin_object();
    for (const auto& [stage, sec] : man.timings) jw.key(stage).value(sec);
    jw.end_object();
    jw.end_object();
    return jw.str();
}

inline void write_manifest(OutputDir* out, RunManifest* man) {
    atomic_write(std::filesystem::path(out->dir()) / "manifest.json", manifest_json(*man) + "\n");
}

struct SweepRow {
    double s = 0.0;
    TodaState state;
    EigenReport report;
    bool solved = false;
    std::string status;
};

inline SweepRow sweep_point(const TodaProblem& p, const ExperimentConfig& c, double s) {
    SweepRow row;
    row.s = s;
    std::vector<double> lam(p.rank());
    const double box = 8.0 * std::numbers::pi / p.rho_s;
    for (int i = 0; i < p.rank(); ++i) lam[i] = s * box / p.d[i];
    ContinuationBranch branch = continuation(p, lam, c.steps);
    if (!branch.complete) {
        row.status = "continuation failed: " + branch.failure;
        row.state = branch.points.back().state;
        return row;
    }
    row.state = branch.points.back().state;
    row.solved = true;
    try {
        row.report = nondegeneracy_certificate(p, row.state);
        row.status = "ok";
    } catch (const std::exception& e) {
        row.status = std::string("certificate error: ") + e.what();
        row.solved = false;
    }
    return row;
}

}  // namespace detail

inline RunManifest run(const ExperimentConfig& config) {
    validate(config);
    RunManifest man;
    man.config = config;
    detail::OutputDir out(config.out_dir);

    switch (config.mode) {
        case RunMode::thresholds: {
            detail::Stopwatch sw(&man, "thresholds");
            CsvWriter csv({"family", "rank", "rho", "lambda_s_max", "safe_bound", "d", "lambda_max"});
            std::string json = "[";
            bool first = true;
            for (Family fam : config.families) {
                for (int n = 1; n <= config.max_rank; ++n) {
                    const LieType t{fam, n};
                    if (!is_valid(t)) continue;
                    const ThresholdReport th = uniqueness_thresholds(t);
                    const SpectrumReport spec =
                        spectral_radius(symmetric_decomposition(build_cartan(t)));
                    csv.cell(std::string(1, family_letter(fam)));
                    csv.cell(n);
                    csv.cell(th.rho);
                    csv.cell(th.lambda_s_max);
                    csv.cell(th.safe_bound);
                    std::string dstr, lstr;
                    for (size_t i = 0; i < th.d.size(); ++i) {
                        dstr += (i ? ";" : "") + to_string(th.d[i]);
                        lstr += (i ? ";" : "") + std::string(format_g17(th.lambda_max[i]));
                    }
                    csv.cell(dstr);
                    csv.cell(lstr);
                    csv.end_row();
                    json += (first ? "" : ",") + detail::cartan_record_json(th, spec);
                    first = false;
                }
            }
            json += "]\n";
            out.write("thresholds.csv", csv.str(), &man);
            out.write("thresholds.json", json, &man);
            break;
        }

        case RunMode::solve:
        case RunMode::continuation: {
            const DomainGrid grid = build_grid(config.grid_n);
            auto poisson = std::make_shared<const PoissonSolver>(grid);
            TodaProblem problem;
            {
                detail::Stopwatch sw(&man, "setup");
                problem = make_problem(grid, LieType{config.family, config.rank},
                                       detail::build_weights(config, grid, poisson), poisson);
            }
            const std::vector<double> lam = detail::resolve_lambda(config, problem);
            man.lambda_final = lam;

            ContinuationBranch branch;
            {
                detail::Stopwatch sw(&man, "solve");
                if (config.mode == RunMode::solve) {
                    TodaState st = newton_solve(problem, lam);
                    branch.points.push_back({1.0, st, st.iterations});
                    branch.complete = st.converged;
                    if (!st.converged) branch.failure = st.message;
                } else {
                    branch = continuation(problem, lam, config.steps);
                }
            }

            const int n = problem.rank();
            std::vector<std::string> cols{"t"};
            for (int i = 1; i <= n; ++i) cols.push_back("lambda_" + std::to_string(i));
            cols.push_back("residual");
            for (int i = 1; i <= n; ++i) cols.push_back("mass_" + std::to_string(i));
            cols.push_back("newton_iterations");
            if (config.certify)
                for (const std::string& c : detail::certificate_column_names(n)) cols.push_back(c);
            CsvWriter csv(cols);

            bool cert_all = true;
            EigenReport last_report;
            {
                detail::Stopwatch sw(&man, "certify");
                for (const BranchPoint& pt : branch.points) {
                    csv.cell(pt.t);
                    for (double l : pt.state.lambda) csv.cell(l);
                    csv.cell(pt.state.residual_norm);
                    for (double m : pt.state.masses) csv.cell(m);
                    csv.cell(pt.newton_iterations);
                    if (config.certify) {
                        const EigenReport rep = nondegeneracy_certificate(problem, pt.state);
                        detail::append_certificate_columns(&csv, rep, n);
                        cert_all = cert_all && rep.certificate;
                        last_report = rep;
                    }
                    csv.end_row();
                }
            }
            out.write("states.csv", csv.str(), &man);
            if (config.certify) {
                out.write("certificate.json", detail::certificate_json(last_report) + "\n", &man);
                out.write("eigenvalues.csv", detail::eigen_table_csv(last_report), &man);
                man.certificate_pass = cert_all;
            }
            detail::dump_state_fields(config, &out, branch.points.back().state, &man);

            if (!branch.complete) {
                man.status = "solver failure: " + branch.failure;
                detail::write_manifest(&out, &man);
                throw SolverError(man.status);
            }
            if (config.certify && !cert_all) {
                man.status = "certificate failure";
                detail::write_manifest(&out, &man);
                throw CertificateError("certificate failed at some continuation point");
            }
            break;
        }

        case RunMode::certify: {
            detail::Stopwatch sw(&man, "certify");
            const std::filesystem::path mpath(config.manifest);
            const nlohmann::json mj = nlohmann::json::parse(read_file(mpath));
            if (mj.value("magic", "") != std::string("todalab-run"))
                throw ConfigError("certify: not a run manifest: " + config.manifest);
            const ExperimentConfig inner = parse_config(mj.at("config").get<std::string>());
            const DomainGrid grid = build_grid(inner.grid_n);
            auto poisson = std::make_shared<const PoissonSolver>(grid);
            TodaProblem problem = make_problem(grid, LieType{inner.family, inner.rank},
                                               detail::build_weights(inner, grid, poisson), poisson);
            TodaState st;
            st.lambda = mj.at("lambda_final").get<std::vector<double>>();
            const auto bases = mj.at("state_files").get<std::vector<std::string>>();
            if (static_cast<int>(bases.size()) != problem.rank())
                throw ConfigError("certify: manifest lists wrong number of state fields");
            const std::filesystem::path base_dir = mpath.parent_path();
            const double h2 = grid.h * grid.h;
            for (int i = 0; i < problem.rank(); ++i) {
                LoadedField lf = read_field_cache(base_dir / bases[i]);
                if (lf.header.n != grid.n) throw ConfigError("certify: field grid mismatch");
                st.u.emplace_back(grid, std::move(lf.values));
                st.masses.push_back(
                    h2 * (problem.weights[i].h_values.values.array() * st.u[i].values.array().exp()).sum());
            }
            const std::vector<GridField> res = residual(problem, st.u, st.lambda);
            st.residual_norm = 0.0;
            for (const GridField& r : res)
                st.residual_norm = std::max(st.residual_norm, r.values.lpNorm<Eigen::Infinity>());
            if (st.residual_norm > 1e-8)
                throw SolverError("certify: loaded state is not a converged solution (residual " +
                                  std::to_string(st.residual_norm) + ")");
            st.converged = true;
            man.lambda_final = st.lambda;

            const EigenReport rep = nondegeneracy_certificate(problem, st);
            out.write("certificate.json", detail::certificate_json(rep) + "\n", &man);
            out.write("eigenvalues.csv", detail::eigen_table_csv(rep), &man);
            man.certificate_pass = rep.certificate;
            if (!rep.certificate) {
                man.status = "certificate failure";
                detail::write_manifest(&out, &man);
                throw CertificateError("certificate failed");
            }
            break;
        }

        case RunMode::sweep: {
            const DomainGrid grid = build_grid(config.grid_n);
            auto poisson = std::make_shared<const PoissonSolver>(grid);
            TodaProblem problem;
            {
                detail::Stopwatch sw(&man, "setup");
                problem = make_problem(grid, LieType{config.family, config.rank},
                                       detail::build_weights(config, grid, poisson), poisson);
            }
            std::vector<detail::SweepRow> rows(config.s_grid.size());
            {
                detail::Stopwatch sw(&man, "sweep");
                std::vector<std::future<detail::SweepRow>> futures;
                for (double s : config.s_grid)
                    futures.push_back(std::async(std::launch::async, detail::sweep_point,
                                                 std::cref(problem), std::cref(config), s));
                for (size_t i = 0; i < futures.size(); ++i) rows[i] = futures[i].get();
            }
            const int n = problem.rank();
            std::vector<std::string> cols{"s"};
            for (int i = 1; i <= n; ++i) cols.push_back("lambda_" + std::to_string(i));
            cols.push_back("residual");
            cols.push_back("converged");
            for (const std::string& c : detail::certificate_column_names(n)) cols.push_back(c);
            cols.push_back("status");
            CsvWriter csv(cols);
            for (const detail::SweepRow& row : rows) {
                csv.cell(row.s);
                for (double l : row.state.lambda) csv.cell(l);
                csv.cell(row.state.residual_norm);
                csv.cell(row.state.converged ? "true" : "false");
                if (row.solved) {
                    detail::append_certificate_columns(&csv, row.report, n);
                } else {
                    for (size_t k = 0; k < detail::certificate_column_names(n).size(); ++k) csv.cell("");
                }
                csv.cell(row.status);
                csv.end_row();
            }
            out.write("sweep.csv", csv.str(), &man);
            break;
        }

        case RunMode::deflate: {
            const DomainGrid grid = build_grid(config.grid_n);
            auto poisson = std::make_shared<const PoissonSolver>(grid);
            TodaProblem problem = make_problem(grid, LieType{config.family, config.rank},
                                               detail::build_weights(config, grid, poisson), poisson);
            const std::vector<double> lam = detail::resolve_lambda(config, problem);
            man.lambda_final = lam;
            ContinuationBranch branch;
            {
                detail::Stopwatch sw(&man, "solve");
                branch = continuation(problem, lam, config.steps);
            }
            if (!branch.complete) {
                man.status = "solver failure: " + branch.failure;
                detail::write_manifest(&out, &man);
                throw SolverError(man.status);
            }
            const TodaState known = branch.points.back().state;
            std::vector<TodaState> found;
            {
                detail::Stopwatch sw(&man, "deflate");
                DeflationOptions dopt;
                dopt.starts = config.deflate_starts;
                dopt.seed = config.seed;
                found = deflated_search(problem, lam, {known}, dopt);
            }
            CsvWriter csv({"solution", "residual", "max_abs_u", "distance_to_known"});
            csv.cell(std::string("known"));
            csv.cell(known.residual_norm);
            double mx = 0.0;
            for (const GridField& f : known.u) mx = std::max(mx, f.values.lpNorm<Eigen::Infinity>());
            csv.cell(mx);
            csv.cell(0.0);
            csv.end_row();
            for (size_t k = 0; k < found.size(); ++k) {
                csv.cell("extra_" + std::to_string(k + 1));
                csv.cell(found[k].residual_norm);
                double fx = 0.0, dist = 0.0;
                for (int i = 0; i < problem.rank(); ++i) {
                    fx = std::max(fx, found[k].u[i].values.lpNorm<Eigen::Infinity>());
                    dist = std::max(dist,
                                    (found[k].u[i].values - known.u[i].values).lpNorm<Eigen::Infinity>());
                }
                csv.cell(fx);
                csv.cell(dist);
                csv.end_row();
            }
            out.write("deflate.csv", csv.str(), &man);
            detail::dump_state_fields(config, &out, known, &man);
            man.status = found.empty() ? "ok" : "additional solutions found";
            break;
        }
    }

    detail::write_manifest(&out, &man);
    return man;
}

}  // namespace todalab
