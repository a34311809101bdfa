#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "unmix/baselines.hpp"
#include "unmix/errors.hpp"
#include "unmix/glup.hpp"
#include "unmix/matrix_io.hpp"
#include "unmix/nglup.hpp"
#include "unmix/selection.hpp"
#include "unmix/synth.hpp"

namespace unmix::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

class Manifest {
public:
    explicit Manifest(std::string command) : start_(std::chrono::steady_clock::now())
    {
        doc_["command"] = std::move(command);
        doc_["params"] = json::object();
    }

    json& params() { return doc_["params"]; }
    json& operator[](const char* key) { return doc_[key]; }

    void set_solver(const SolveReport& r)
    {
        doc_["solver"] = {{"iterations", r.iterations},
                          {"converged", r.converged},
                          {"primal_residual", r.final_primal_residual},
                          {"dual_residual", r.final_dual_residual},
                          {"objective", r.objective_value}};
        if (r.outer_iterations > 0) {
            doc_["solver"]["outer_iterations"] = r.outer_iterations;
            doc_["solver"]["noise_variance"] = r.noise_variance;
        }
    }

    void write(const fs::path& dir)
    {
        doc_["duration_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::ofstream out(dir / "manifest.json");
        out << doc_.dump(2) << '\n';
    }

private:
    json doc_;
    std::chrono::steady_clock::time_point start_;
};

double parse_snr(const std::string& text)
{
    if (text == "inf" || text == "+inf" || text == "none") {
        return std::numeric_limits<double>::infinity();
    }
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) {
        throw InvalidParameter("bad SNR value '" + text + "'");
    }
    return value;
}

json snr_json(double snr) { return std::isfinite(snr) ? json(snr) : json("inf"); }

/// Reads 1-based pixel indices from a matrix file (any shape).
IndexList read_indices(const fs::path& path)
{
    const Matrix m = read_matrix(path);
    IndexList out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Index k = 0; k < m.size(); ++k) {
        const double v = m.data()[k];
        if (v != std::floor(v) || v < 1.0) {
            throw FormatError(path.string() + ": indices must be positive integers");
        }
        out.push_back(static_cast<Index>(v) - 1);
    }
    return out;
}

void write_indices(const fs::path& path, const IndexList& indices)
{
    Matrix m(static_cast<Index>(indices.size()), 1);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        m(static_cast<Index>(i), 0) = static_cast<double>(indices[i] + 1);
    }
    write_csv_matrix(path, m);
}

json one_based(const IndexList& indices)
{
    json out = json::array();
    for (const Index i : indices) {
        out.push_back(i + 1);
    }
    return out;
}

std::ofstream open_table(const fs::path& path, const std::string& header)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    out.precision(17);
    out << header << '\n';
    return out;
}

void write_endmember_table(const fs::path& path, const EndmemberSet& em)
{
    auto out = open_table(path, "rank,pixel_index,row_score");
    for (Index k = 0; k < em.size(); ++k) {
        out << k + 1 << ',' << em.pixel_indices[static_cast<std::size_t>(k)] + 1 << ',' << em.row_scores(k) << '\n';
    }
}

fs::path prepare_output(const std::string& dir)
{
    const fs::path out(dir);
    fs::create_directories(out);
    return out;
}

// ---------------------------------------------------------------------------

struct SolverFlags {
    std::string algo;
    double mu = 10.0;
    double rho = 100.0;
    double eps = 1e-5;
    std::size_t max_iterations = 5000;
    std::size_t j_max = 1;
    double mu0 = 10.0;
    double rho0 = 100.0;
    double eps_outer = 1e-4;
    std::size_t max_outer = 5000;
    double weight_ridge = 1e-8;
    std::string weight_scaling = "normalized";

    void add_to(CLI::App& cmd, bool with_algo)
    {
        if (with_algo) {
            cmd.add_option("--algo", algo, "glup or nglup")
                ->required()
                ->check(CLI::IsMember({"glup", "nglup"}));
        }
        cmd.add_option("--mu", mu, "group-lasso weight")->capture_default_str();
        cmd.add_option("--rho", rho, "ADMM penalty")->capture_default_str();
        cmd.add_option("--eps", eps, "primal and dual tolerance")->capture_default_str();
        cmd.add_option("--max-iter", max_iterations, "ADMM iteration cap")->capture_default_str();
        cmd.add_option("--jmax", j_max, "NGLUP inner iterations per outer iteration")->capture_default_str();
        cmd.add_option("--mu0", mu0, "NGLUP warm-start mu")->capture_default_str();
        cmd.add_option("--rho0", rho0, "NGLUP warm-start rho")->capture_default_str();
        cmd.add_option("--eps-outer", eps_outer, "NGLUP outer tolerance")->capture_default_str();
        cmd.add_option("--max-outer", max_outer, "NGLUP outer iteration cap")->capture_default_str();
        cmd.add_option("--weight-ridge", weight_ridge, "relative ridge on C(X)")->capture_default_str();
        cmd.add_option("--weight-scaling", weight_scaling, "normalized or literal")
            ->check(CLI::IsMember({"normalized", "literal"}))
            ->capture_default_str();
    }

    GlupConfig glup() const
    {
        GlupConfig c;
        c.mu = mu;
        c.rho = rho;
        c.eps_primal = eps;
        c.eps_dual = eps;
        c.max_iterations = max_iterations;
        return c;
    }

    NglupConfig nglup() const
    {
        NglupConfig c;
        c.glup = glup();
        c.warm_start = glup();
        c.warm_start.mu = mu0;
        c.warm_start.rho = rho0;
        c.j_max = j_max;
        c.eps_outer = eps_outer;
        c.max_outer_iterations = max_outer;
        c.weight_ridge = weight_ridge;
        c.weight_scaling = weight_scaling == "literal" ? WeightScaling::Literal : WeightScaling::NoiseNormalized;
        return c;
    }

    SolveReport solve(const std::string& which, const SpectralScene& scene, const CandidateSet& cand) const
    {
        return which == "glup" ? glup_solve(scene, cand, glup()) : nglup_solve(scene, cand, nglup());
    }

    json to_json(const std::string& which) const
    {
        json j = {{"algo", which}, {"mu", mu}, {"rho", rho}, {"eps", eps}, {"max_iter", max_iterations}};
        if (which == "nglup") {
            j["jmax"] = j_max;
            j["mu0"] = mu0;
            j["rho0"] = rho0;
            j["eps_outer"] = eps_outer;
            j["max_outer"] = max_outer;
            j["weight_ridge"] = weight_ridge;
            j["weight_scaling"] = weight_scaling;
        }
        return j;
    }
};

// ---------------------------------------------------------------------------
// synth

struct SynthFlags {
    Index endmembers = 0;
    Index pixels = 0;
    Index bands = 420;
    std::string snr = "inf";
    std::uint64_t seed = 0;
    std::string placement = "first";
    double max_coherence = 0.95;
    std::string library;
    std::string out;
};

int cmd_synth(const SynthFlags& f)
{
    Manifest manifest("synth");
    SynthConfig config;
    config.band_count = f.bands;
    config.endmember_count = f.endmembers;
    config.pixel_count = f.pixels;
    config.snr_db = parse_snr(f.snr);
    config.seed = f.seed;
    config.placement = f.placement == "random" ? PurePixelPlacement::Random : PurePixelPlacement::FirstM;
    config.target_max_coherence = f.max_coherence;
    if (!f.library.empty()) {
        config.library = read_matrix(f.library);
        config.band_count = config.library->rows();
        config.endmember_count = config.library->cols();
    } else if (f.endmembers < 1) {
        throw InvalidParameter("--endmembers is required without --library");
    }

    const auto synthetic = synthesize_scene(config);
    const fs::path out = prepare_output(f.out);
    write_matrix(out / "scene.hsm", synthetic.scene.data());
    write_matrix(out / "A.hsm", synthetic.truth.true_abundances);
    write_matrix(out / "R.hsm", synthetic.truth.endmember_spectra);
    write_matrix(out / "E.hsm", synthetic.truth.noise);
    write_matrix(out / "X_true.hsm", synthetic.truth.embedded_abundances());
    write_indices(out / "endmember_indices.csv", synthetic.truth.endmember_pixel_indices);

    manifest.params() = {{"endmembers", config.endmember_count},
                         {"pixels", config.pixel_count},
                         {"bands", config.band_count},
                         {"snr_db", snr_json(config.snr_db)},
                         {"placement", f.placement},
                         {"max_coherence", config.target_max_coherence},
                         {"library", f.library},
                         {"output", f.out}};
    manifest["seed"] = f.seed;
    manifest["scene"] = {
        {"endmember_pixel_indices", one_based(synthetic.truth.endmember_pixel_indices)},
        {"noise_sigma", synthetic.truth.noise_sigma},
        {"realized_snr_db", std::isfinite(config.snr_db)
                                ? json(realized_snr_db(synthetic.scene.data() - synthetic.truth.noise,
                                                       synthetic.truth.noise))
                                : json("inf")},
        {"library_max_coherence", synthetic.library.max_coherence},
        {"library_mean_coherence", synthetic.library.mean_coherence},
        {"coherence_target_met", synthetic.library.coherence_target_met}};
    manifest.write(out);
    if (!synthetic.library.coherence_target_met) {
        std::cerr << "warning: spectra coherence target not met (max " << synthetic.library.max_coherence << ")\n";
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// unmix

struct UnmixFlags {
    SolverFlags solver;
    std::string scene;
    std::string omega;
    bool all = false;
    Index sample = 0;
    std::uint64_t seed = 0;
    bool allow_nonconverged = false;
    std::string out;
};

CandidateSet select_candidates(const SpectralScene& scene, const UnmixFlags& f, json& params)
{
    if (!f.omega.empty()) {
        params["omega"] = f.omega;
        const IndexList idx = read_indices(f.omega);
        return restrict_columns(scene, idx);
    }
    if (f.sample > 0) {
        if (f.sample > scene.pixel_count()) {
            throw InvalidParameter("--sample exceeds the pixel count");
        }
        params["sample"] = f.sample;
        IndexList order(static_cast<std::size_t>(scene.pixel_count()));
        std::iota(order.begin(), order.end(), Index{0});
        std::mt19937_64 rng(f.seed);
        std::shuffle(order.begin(), order.end(), rng);
        order.resize(static_cast<std::size_t>(f.sample));
        std::sort(order.begin(), order.end());
        return restrict_columns(scene, order);
    }
    params["omega"] = "all";
    return all_columns(scene);
}

int cmd_unmix(const UnmixFlags& f)
{
    Manifest manifest("unmix");
    const SpectralScene scene(read_matrix(f.scene));
    manifest.params() = f.solver.to_json(f.solver.algo);
    manifest.params()["scene"] = f.scene;
    manifest.params()["output"] = f.out;
    const CandidateSet cand = select_candidates(scene, f, manifest.params());
    manifest["seed"] = f.seed;

    const SolveReport report = f.solver.solve(f.solver.algo, scene, cand);

    const fs::path out = prepare_output(f.out);
    write_matrix(out / "X.hsm", report.abundance.x);
    write_indices(out / "omega.csv", cand.indices);
    {
        const Vector means = report.abundance.row_means();
        auto table = open_table(out / "row_means.csv", "row,pixel_index,mean");
        for (Index i = 0; i < means.size(); ++i) {
            table << i + 1 << ',' << cand.indices[static_cast<std::size_t>(i)] + 1 << ',' << means(i) << '\n';
        }
    }
    {
        auto table = open_table(out / "residuals.csv", "iteration,primal,dual");
        for (std::size_t k = 0; k < report.history.size(); ++k) {
            table << k + 1 << ',' << report.history[k].primal << ',' << report.history[k].dual << '\n';
        }
    }
    manifest.set_solver(report);
    manifest["feasibility_violation"] = report.abundance.feasibility_tolerance;
    manifest.write(out);

    if (!report.converged) {
        std::cerr << "solver did not converge after " << report.iterations << " iterations (primal "
                  << report.final_primal_residual << ", dual " << report.final_dual_residual << ")\n";
        return f.allow_nonconverged ? kOk : kNotConverged;
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// detect

struct DetectFlags {
    std::string x;
    std::string scene;
    std::string omega;
    double threshold = kDefaultDetectionThreshold;
    double max_coherence = kDefaultMaxCoherence;
    std::string out;
};

int cmd_detect(const DetectFlags& f)
{
    Manifest manifest("detect");
    const SpectralScene scene(read_matrix(f.scene));
    const CandidateSet cand = f.omega.empty() ? all_columns(scene) : restrict_columns(scene, read_indices(f.omega));
    const AbundanceEstimate abundance(read_matrix(f.x));

    const EndmemberSet detected = detect_endmembers(abundance, cand, scene, f.threshold);
    const EndmemberSet kept = deduplicate(detected, f.max_coherence);

    const fs::path out = prepare_output(f.out);
    write_endmember_table(out / "detected.csv", detected);
    write_endmember_table(out / "endmembers.csv", kept);
    write_matrix(out / "spectra.hsm", kept.spectra);

    manifest.params() = {{"x", f.x},
                         {"scene", f.scene},
                         {"omega", f.omega.empty() ? "all" : f.omega},
                         {"threshold", f.threshold},
                         {"max_coherence", f.max_coherence},
                         {"output", f.out}};
    manifest["seed"] = nullptr;
    manifest["result"] = {{"m_hat_detected", detected.size()},
                          {"m_hat", kept.size()},
                          {"pixel_indices", one_based(kept.pixel_indices)}};
    manifest.write(out);
    return kOk;
}

// ---------------------------------------------------------------------------
// fcls

struct FclsFlags {
    std::string scene;
    std::string endmembers;
    std::string out;
};

int cmd_fcls(const FclsFlags& f)
{
    Manifest manifest("fcls");
    const SpectralScene scene(read_matrix(f.scene));
    const Matrix spectra = read_matrix(f.endmembers);
    const FclsResult result = fcls(scene, spectra);

    const fs::path out = prepare_output(f.out);
    write_matrix(out / "abundances.hsm", result.abundances);
    {
        std::string header = "pixel";
        for (Index k = 0; k < spectra.cols(); ++k) {
            header += ",endmember_" + std::to_string(k + 1);
        }
        header += ",residual";
        auto table = open_table(out / "abundance_maps.csv", header);
        for (Index j = 0; j < scene.pixel_count(); ++j) {
            table << j + 1;
            for (Index k = 0; k < spectra.cols(); ++k) {
                table << ',' << result.abundances(k, j);
            }
            table << ',' << result.per_pixel_residual(j) << '\n';
        }
    }
    manifest.params() = {{"scene", f.scene}, {"endmembers", f.endmembers}, {"output", f.out}};
    manifest["seed"] = nullptr;
    manifest["result"] = {{"reconstruction_error", (scene.data() - spectra * result.abundances).norm()},
                          {"max_kkt_residual", result.max_kkt_residual}};
    manifest.write(out);
    return kOk;
}

// ---------------------------------------------------------------------------
// nfindr

struct NfindrFlags {
    std::string scene;
    Index m = 0;
    std::uint64_t seed = 0;
    std::size_t max_sweeps = kDefaultNfindrSweeps;
    std::string out;
};

int cmd_nfindr(const NfindrFlags& f)
{
    Manifest manifest("nfindr");
    const SpectralScene scene(read_matrix(f.scene));
    const NfindrResult result = nfindr(scene, f.m, f.seed, f.max_sweeps);

    const fs::path out = prepare_output(f.out);
    write_endmember_table(out / "endmembers.csv", result.endmembers);
    write_matrix(out / "spectra.hsm", result.endmembers.spectra);
    {
        auto table = open_table(out / "volumes.csv", "step,volume");
        for (std::size_t k = 0; k < result.volume_history.size(); ++k) {
            table << k << ',' << result.volume_history[k] << '\n';
        }
    }
    manifest.params() = {{"scene", f.scene}, {"m", f.m}, {"max_sweeps", f.max_sweeps}, {"output", f.out}};
    manifest["seed"] = f.seed;
    manifest["result"] = {{"pixel_indices", one_based(result.endmembers.pixel_indices)},
                          {"sweeps", result.sweeps},
                          {"volume", result.volume_history.back()}};
    manifest.write(out);
    return kOk;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsFlags {
    std::string estimate;
    std::string truth;
    bool spectra = false;
    std::string out;
};

int cmd_metrics(const MetricsFlags& f)
{
    Manifest manifest("metrics");
    const Matrix estimate = read_matrix(f.estimate);
    const Matrix truth = read_matrix(f.truth);
    const QualityMetrics q = f.spectra ? compare_spectra(estimate, truth) : compute_metrics(estimate, truth);

    const fs::path out = prepare_output(f.out);
    {
        auto table = open_table(out / "metrics.csv", "metric,value");
        if (!f.spectra) {
            table << "rmse_n2," << q.rmse_n2 << '\n';
            table << "rmse," << q.rmse << '\n';
        }
        table << "max_spectral_angle_rad," << q.max_spectral_angle_rad << '\n';
        table << "avg_spectral_angle_rad," << q.avg_spectral_angle_rad << '\n';
    }
    manifest.params() = {{"estimate", f.estimate}, {"truth", f.truth}, {"spectra", f.spectra}, {"output", f.out}};
    manifest["seed"] = nullptr;
    manifest["result"] = {{"max_spectral_angle_rad", q.max_spectral_angle_rad},
                          {"avg_spectral_angle_rad", q.avg_spectral_angle_rad}};
    if (!f.spectra) {
        manifest["result"]["rmse_n2"] = q.rmse_n2;
        manifest["result"]["rmse"] = q.rmse;
    }
    manifest.write(out);
    return kOk;
}

// ---------------------------------------------------------------------------
// bench-detect

struct BenchFlags {
    SolverFlags solver;
    Index endmembers = 7;
    Index pixels = 100;
    Index bands = 420;
    std::string snr_list = "20,30";
    std::size_t trials = 25;
    std::uint64_t seed = 0;
    double threshold = kDefaultDetectionThreshold;
    unsigned threads = 1;
    bool allow_nonconverged = false;
    std::string out;
};

struct TrialResult {
    double snr_db = 0.0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    Index m_hat = 0;
    bool pure_pixels_found = false;
    bool converged = false;
    std::size_t iterations = 0;
    double rmse_n2 = 0.0;
};

TrialResult run_trial(const BenchFlags& f, double snr, std::size_t trial)
{
    SynthConfig config;
    config.band_count = f.bands;
    config.endmember_count = f.endmembers;
    config.pixel_count = f.pixels;
    config.snr_db = snr;
    config.seed = f.seed + trial;
    const auto synthetic = synthesize_scene(config);
    const CandidateSet cand = all_columns(synthetic.scene);
    const SolveReport report = nglup_solve(synthetic.scene, cand, f.solver.nglup());
    const EndmemberSet detected = detect_endmembers(report.abundance, cand, synthetic.scene, f.threshold);

    TrialResult r;
    r.snr_db = snr;
    r.trial = trial;
    r.seed = config.seed;
    r.m_hat = detected.size();
    IndexList found = detected.pixel_indices;
    std::sort(found.begin(), found.end());
    r.pure_pixels_found = found == synthetic.truth.endmember_pixel_indices;
    r.converged = report.converged;
    r.iterations = report.iterations;
    r.rmse_n2 = compute_metrics(report.abundance.x, synthetic.truth.embedded_abundances()).rmse_n2;
    return r;
}

int cmd_bench_detect(const BenchFlags& f)
{
    Manifest manifest("bench-detect");
    std::vector<double> snrs;
    {
        std::stringstream ss(f.snr_list);
        std::string item;
        while (std::getline(ss, item, ',')) {
            snrs.push_back(parse_snr(item));
        }
    }
    if (snrs.empty() || f.trials < 1) {
        throw InvalidParameter("need at least one SNR and one trial");
    }

    const std::size_t total = snrs.size() * f.trials;
    std::vector<TrialResult> results(total);
    std::vector<std::string> errors(total);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t k = next++; k < total; k = next++) {
            try {
                results[k] = run_trial(f, snrs[k / f.trials], k % f.trials);
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(f.threads, static_cast<unsigned>(total)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) {
            throw NumericalError("trial failed: " + e);
        }
    }

    const fs::path out = prepare_output(f.out);
    {
        auto table = open_table(out / "trials.csv",
                                "snr_db,trial,seed,m_hat,pure_pixels_found,converged,iterations,rmse_n2");
        for (const auto& r : results) {
            table << r.snr_db << ',' << r.trial << ',' << r.seed << ',' << r.m_hat << ',' << r.pure_pixels_found
                  << ',' << r.converged << ',' << r.iterations << ',' << r.rmse_n2 << '\n';
        }
    }
    bool all_converged = true;
    json summary = json::array();
    {
        auto table = open_table(out / "table.csv", "snr_db,m_hat,probability,trials");
        for (std::size_t s = 0; s < snrs.size(); ++s) {
            std::map<Index, std::size_t> counts;
            for (std::size_t t = 0; t < f.trials; ++t) {
                const auto& r = results[s * f.trials + t];
                ++counts[r.m_hat];
                all_converged = all_converged && r.converged;
            }
            json row = {{"snr_db", snrs[s]}};
            for (const auto& [m_hat, count] : counts) {
                const double p = static_cast<double>(count) / static_cast<double>(f.trials);
                table << snrs[s] << ',' << m_hat << ',' << p << ',' << f.trials << '\n';
                row["probability"][std::to_string(m_hat)] = p;
            }
            summary.push_back(row);
        }
    }

    manifest.params() = f.solver.to_json("nglup");
    manifest.params()["endmembers"] = f.endmembers;
    manifest.params()["pixels"] = f.pixels;
    manifest.params()["bands"] = f.bands;
    manifest.params()["snr_db"] = snrs;
    manifest.params()["trials"] = f.trials;
    manifest.params()["threshold"] = f.threshold;
    manifest.params()["threads"] = threads;
    manifest.params()["output"] = f.out;
    manifest["seed"] = f.seed;
    manifest["result"] = summary;
    manifest["solver"] = {{"trials_converged", std::count_if(results.begin(), results.end(),
                                                             [](const TrialResult& r) { return r.converged; })},
                          {"trials", total}};
    manifest.write(out);
    if (!all_converged && !f.allow_nonconverged) {
        std::cerr << "some trials did not converge\n";
        return kNotConverged;
    }
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args)
{
    CLI::App app{"Blind fully constrained hyperspectral unmixing (GLUP / NGLUP)"};
    app.require_subcommand(1);

    SynthFlags synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scene with ground truth");
    synth_cmd->add_option("--endmembers", synth.endmembers, "number of endmembers M");
    synth_cmd->add_option("--pixels", synth.pixels, "number of pixels N")->required();
    synth_cmd->add_option("--bands", synth.bands, "number of bands L")->capture_default_str();
    synth_cmd->add_option("--snr", synth.snr, "SNR in dB, or inf")->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
    synth_cmd->add_option("--placement", synth.placement, "first or random")
        ->check(CLI::IsMember({"first", "random"}))
        ->capture_default_str();
    synth_cmd->add_option("--max-coherence", synth.max_coherence, "target max pairwise coherence")
        ->capture_default_str();
    synth_cmd->add_option("--library", synth.library, "L x M spectra matrix to use instead of the generator");
    synth_cmd->add_option("-o,--output", synth.out, "output directory")->required();

    UnmixFlags unmix;
    auto* unmix_cmd = app.add_subcommand("unmix", "run GLUP or NGLUP");
    unmix.solver.add_to(*unmix_cmd, true);
    unmix_cmd->add_option("--scene", unmix.scene)->required();
    auto* omega_opt = unmix_cmd->add_option("--omega", unmix.omega, "file of 1-based candidate indices");
    auto* all_opt = unmix_cmd->add_flag("--all", unmix.all, "use every pixel as a candidate (default)");
    auto* sample_opt = unmix_cmd->add_option("--sample", unmix.sample, "draw K candidate pixels at random");
    omega_opt->excludes(all_opt)->excludes(sample_opt);
    all_opt->excludes(sample_opt);
    unmix_cmd->add_option("--seed", unmix.seed, "seed for --sample")->capture_default_str();
    unmix_cmd->add_flag("--allow-nonconverged", unmix.allow_nonconverged);
    unmix_cmd->add_option("-o,--output", unmix.out)->required();

    DetectFlags detect;
    auto* detect_cmd = app.add_subcommand("detect", "threshold row means and drop coherent duplicates");
    detect_cmd->add_option("--x", detect.x, "abundance matrix from unmix")->required();
    detect_cmd->add_option("--scene", detect.scene)->required();
    detect_cmd->add_option("--omega", detect.omega, "candidate indices used by unmix");
    detect_cmd->add_option("--threshold", detect.threshold)->capture_default_str();
    detect_cmd->add_option("--max-coherence", detect.max_coherence)->capture_default_str();
    detect_cmd->add_option("-o,--output", detect.out)->required();

    FclsFlags fcls_flags;
    auto* fcls_cmd = app.add_subcommand("fcls", "fully constrained least squares abundances");
    fcls_cmd->add_option("--scene", fcls_flags.scene)->required();
    fcls_cmd->add_option("--endmembers", fcls_flags.endmembers, "L x M spectra matrix")->required();
    fcls_cmd->add_option("-o,--output", fcls_flags.out)->required();

    NfindrFlags nf;
    auto* nfindr_cmd = app.add_subcommand("nfindr", "N-FINDR endmember extraction");
    nfindr_cmd->add_option("--scene", nf.scene)->required();
    nfindr_cmd->add_option("--m", nf.m, "number of endmembers")->required();
    nfindr_cmd->add_option("--seed", nf.seed)->capture_default_str();
    nfindr_cmd->add_option("--max-sweeps", nf.max_sweeps)->capture_default_str();
    nfindr_cmd->add_option("-o,--output", nf.out)->required();

    MetricsFlags metrics;
    auto* metrics_cmd = app.add_subcommand("metrics", "RMSE and spectral angles against ground truth");
    metrics_cmd->add_option("--estimate", metrics.estimate)->required();
    metrics_cmd->add_option("--truth", metrics.truth)->required();
    metrics_cmd->add_flag("--spectra", metrics.spectra, "compare spectra sets (best match per reference)");
    metrics_cmd->add_option("-o,--output", metrics.out)->required();

    BenchFlags bench;
    auto* bench_cmd = app.add_subcommand("bench-detect", "seeded detection-probability benchmark");
    bench.solver.add_to(*bench_cmd, false);
    bench_cmd->add_option("--endmembers", bench.endmembers)->capture_default_str();
    bench_cmd->add_option("--pixels", bench.pixels)->capture_default_str();
    bench_cmd->add_option("--bands", bench.bands)->capture_default_str();
    bench_cmd->add_option("--snr", bench.snr_list, "comma-separated SNR list in dB")->capture_default_str();
    bench_cmd->add_option("--trials", bench.trials)->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "trial t uses seed + t")->capture_default_str();
    bench_cmd->add_option("--threshold", bench.threshold)->capture_default_str();
    bench_cmd->add_option("--threads", bench.threads)->capture_default_str();
    bench_cmd->add_flag("--allow-nonconverged", bench.allow_nonconverged);
    bench_cmd->add_option("-o,--output", bench.out)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*synth_cmd) {
            return cmd_synth(synth);
        }
        if (*unmix_cmd) {
            return cmd_unmix(unmix);
        }
        if (*detect_cmd) {
            return cmd_detect(detect);
        }
        if (*fcls_cmd) {
            return cmd_fcls(fcls_flags);
        }
        if (*nfindr_cmd) {
            return cmd_nfindr(nf);
        }
        if (*metrics_cmd) {
            return cmd_metrics(metrics);
        }
        if (*bench_cmd) {
            return cmd_bench_detect(bench);
        }
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

} // namespace unmix::cli
