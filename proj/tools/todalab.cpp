// todalab command line: cartan | domain | solve | certify | sweep.
// Exit codes: 0 success, 2 config error, 3 solver failure, 4 certificate failure.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "todalab/run.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitCertificate = 4;

struct CommonFlags {
    std::string config_path;
    std::string family = "A";
    int rank = 2;
    int grid_n = 63;
    std::vector<double> lambda;
    double s = -1.0;
    int steps = 8;
    int deflate_starts = 0;
    unsigned long long seed = 1;
    std::string out_dir = "out";
    std::string weight_config;
    bool certify = false;
};

todalab::ExperimentConfig assemble_config(const CommonFlags& fl, todalab::RunMode mode) {
    todalab::ExperimentConfig cfg;
    if (!fl.config_path.empty()) cfg = todalab::parse_config(todalab::read_file(fl.config_path));
    cfg.mode = mode;
    if (fl.config_path.empty()) {
        const auto fam = fl.family.size() == 1 ? todalab::family_from_letter(fl.family[0]) : std::nullopt;
        if (!fam) throw todalab::ConfigError("unknown family '" + fl.family + "'");
        cfg.family = *fam;
        cfg.rank = fl.rank;
        cfg.grid_n = fl.grid_n;
        cfg.lambda = fl.lambda;
        if (fl.s >= 0.0) cfg.s = fl.s;
        cfg.steps = fl.steps;
        cfg.deflate_starts = fl.deflate_starts;
        cfg.seed = fl.seed;
        cfg.out_dir = fl.out_dir;
        cfg.certify = fl.certify;
        if (!fl.weight_config.empty()) {
            // Weight spec file: same key=value syntax, only f_* and sources keys.
            const todalab::ExperimentConfig w =
                todalab::parse_config("mode = solve\n" + todalab::read_file(fl.weight_config));
            cfg.f_preset = w.f_preset;
            cfg.f_coeff = w.f_coeff;
            cfg.f_center_x = w.f_center_x;
            cfg.f_center_y = w.f_center_y;
            cfg.sources = w.sources;
        }
    } else if (!fl.out_dir.empty() && fl.out_dir != "out") {
        cfg.out_dir = fl.out_dir;  // output directory override
    }
    todalab::validate(cfg);
    return cfg;
}

int run_config(const todalab::ExperimentConfig& cfg) {
    const todalab::RunManifest man = todalab::run(cfg);
    std::printf("wrote %zu files to %s (status: %s)\n", man.files.size(), cfg.out_dir.c_str(),
                man.status.c_str());
    return kExitOk;
}

void print_aligned_table(const todalab::ThresholdReport& th) {
    std::printf("%-6s %-4s %-22s %-22s %-22s\n", "type", "i", "d_i", "lambda_max_i", "lambda_s_max");
    for (size_t i = 0; i < th.lambda_max.size(); ++i)
        std::printf("%-6s %-4zu %-22s %-22.15g %-22.15g\n", th.type.name().c_str(), i + 1,
                    todalab::to_string(th.d[i]).c_str(), th.lambda_max[i], th.lambda_s_max);
}

int cmd_cartan(const std::string& family, int rank, bool thresholds, bool spectrum, int verify_bounds,
               bool table) {
    const auto fam = family.size() == 1 ? todalab::family_from_letter(family[0]) : std::nullopt;
    if (!fam) throw todalab::ConfigError("unknown family '" + family + "'");

    if (verify_bounds > 0) {
        const todalab::BoundsReport rep = todalab::verify_radius_bounds(*fam, verify_bounds);
        for (const todalab::BoundsEntry& e : rep.entries)
            std::printf("{\"family\":\"%c\",\"rank\":%d,\"rho\":%s,\"ok\":%s}\n",
                        todalab::family_letter(*fam), e.rank, todalab::format_g17(e.rho).c_str(),
                        e.ok ? "true" : "false");
        if (!rep.pass) {
            std::fprintf(stderr, "radius bound violated at rank %d\n", rep.first_violation);
            return kExitCertificate;
        }
        return kExitOk;
    }

    const todalab::LieType t{*fam, rank};
    todalab::require_valid(t);
    const todalab::ThresholdReport th = todalab::uniqueness_thresholds(t);
    const todalab::SpectrumReport spec =
        todalab::spectral_radius(todalab::symmetric_decomposition(todalab::build_cartan(t)));
    std::printf("%s\n", todalab::detail::cartan_record_json(th, spec).c_str());
    if (spectrum) {
        std::printf("eigenvalues:");
        for (double e : spec.eigenvalues) std::printf(" %s", todalab::format_g17(e).c_str());
        std::printf("\n");
    }
    if (thresholds || table) print_aligned_table(th);
    return kExitOk;
}

int cmd_domain(int grid_n, const std::vector<std::string>& sources, const std::string& out_dir) {
    const todalab::DomainGrid grid = todalab::build_grid(grid_n);
    const todalab::PoissonSolver poisson(grid);
    std::filesystem::create_directories(out_dir);
    int k = 0;
    for (const std::string& spec : sources) {
        const auto parts = todalab::detail::split(spec, ',');
        if (parts.size() != 3) throw todalab::ConfigError("source must be x,y,alpha: " + spec);
        const todalab::SingularSource s = todalab::snap_source(
            grid, todalab::detail::parse_double(parts[0], "source"),
            todalab::detail::parse_double(parts[1], "source"),
            todalab::detail::parse_double(parts[2], "source"));
        const todalab::GridField g = todalab::greens_function(poisson, s.node_i, s.node_j);
        todalab::FieldHeader hdr;
        hdr.n = grid.n;
        hdr.kind = "greens";
        hdr.extra["alpha"] = s.alpha;
        hdr.extra["p_i"] = s.node_i;
        hdr.extra["p_j"] = s.node_j;
        const std::string base = "greens_" + std::to_string(++k);
        todalab::write_field_cache(std::filesystem::path(out_dir) / base, hdr, g.values);
        std::printf("cached %s for source (%g, %g, alpha=%g) at node (%d, %d)\n", base.c_str(), s.x,
                    s.y, s.alpha, s.node_i, s.node_j);
    }
    if (k == 0) std::printf("no sources given; nothing cached\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-field Toda system laboratory"};
    app.require_subcommand(1);

    // cartan
    std::string family = "A";
    int rank = 2;
    bool thresholds = false, spectrum = false, table = false;
    int verify_bounds = 0;
    CLI::App* cartan = app.add_subcommand("cartan", "Cartan matrix spectra and thresholds");
    cartan->add_option("--family", family, "family letter A..G");
    cartan->add_option("--rank", rank, "rank");
    cartan->add_flag("--thresholds", thresholds, "print the threshold table");
    cartan->add_flag("--spectrum", spectrum, "print the full spectrum");
    cartan->add_flag("--table", table, "aligned text table");
    cartan->add_option("--verify-bounds", verify_bounds, "check radius bounds up to this rank");

    // domain
    int grid_n = 63;
    std::vector<std::string> dom_sources;
    std::string dom_out = "domain_cache";
    CLI::App* domain = app.add_subcommand("domain", "precompute and cache Green's functions");
    domain->add_option("--n", grid_n, "interior nodes per axis");
    domain->add_option("--source", dom_sources, "source as x,y,alpha (repeatable)");
    domain->add_option("--out", dom_out, "cache directory");

    // solve / sweep / certify
    CommonFlags fl;
    CLI::App* solve = app.add_subcommand("solve", "solve the Toda system");
    bool do_continuation = false;
    solve->add_option("--config", fl.config_path, "experiment config file");
    solve->add_option("--family", fl.family, "family letter");
    solve->add_option("--rank", fl.rank, "rank");
    solve->add_option("--n", fl.grid_n, "grid size");
    solve->add_option("--lambda", fl.lambda, "lambda vector");
    solve->add_option("--at-threshold", fl.s, "lambda = s * threshold box");
    solve->add_option("--continuation", fl.steps, "continuation steps")->expected(1);
    solve->add_flag("--trace", do_continuation, "record the whole continuation branch");
    solve->add_option("--deflate", fl.deflate_starts, "deflated multistart count");
    solve->add_option("--weights", fl.weight_config, "weight config file");
    solve->add_option("--seed", fl.seed, "rng seed");
    solve->add_option("--out", fl.out_dir, "output directory");
    solve->add_flag("--certify", fl.certify, "run the non-degeneracy certificate");

    CommonFlags swfl;
    std::vector<double> s_grid;
    CLI::App* sweep = app.add_subcommand("sweep", "sweep s over the threshold box");
    sweep->add_option("--config", swfl.config_path, "experiment config file");
    sweep->add_option("--family", swfl.family, "family letter");
    sweep->add_option("--rank", swfl.rank, "rank");
    sweep->add_option("--n", swfl.grid_n, "grid size");
    sweep->add_option("--s-grid", s_grid, "s values");
    sweep->add_option("--steps", swfl.steps, "continuation steps per point");
    sweep->add_option("--seed", swfl.seed, "rng seed");
    sweep->add_option("--out", swfl.out_dir, "output directory");

    std::string manifest_path, cert_out = "out";
    CLI::App* certify = app.add_subcommand("certify", "certify a stored solve");
    certify->add_option("manifest", manifest_path, "run manifest from a solve")->required();
    certify->add_option("--out", cert_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cartan->parsed()) return cmd_cartan(family, rank, thresholds, spectrum, verify_bounds, table);
        if (domain->parsed()) return cmd_domain(grid_n, dom_sources, dom_out);
        if (solve->parsed()) {
            todalab::RunMode mode = todalab::RunMode::solve;
            if (do_continuation) mode = todalab::RunMode::continuation;
            if (fl.deflate_starts > 0) mode = todalab::RunMode::deflate;
            return run_config(assemble_config(fl, mode));
        }
        if (sweep->parsed()) {
            todalab::ExperimentConfig cfg = assemble_config(swfl, todalab::RunMode::sweep);
            if (!s_grid.empty()) cfg.s_grid = s_grid;
            todalab::validate(cfg);
            return run_config(cfg);
        }
        if (certify->parsed()) {
            todalab::ExperimentConfig cfg;
            cfg.mode = todalab::RunMode::certify;
            cfg.manifest = manifest_path;
            cfg.out_dir = cert_out;
            todalab::validate(cfg);
            return run_config(cfg);
        }
    } catch (const todalab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const todalab::SolverError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kExitSolver;
    } catch (const todalab::CertificateError& e) {
        std::fprintf(stderr, "certificate failure: %s\n", e.what());
        return kExitCertificate;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolver;
    }
    return kExitOk;
}
