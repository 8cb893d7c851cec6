// kerrwig: run a manifest or compare two output files.

#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kerrwig/kerrwig.hpp"

namespace {

int do_run(const std::string& manifest_path, const std::map<std::string, std::string>& overrides) {
    using namespace kerrwig;
    RunManifest manifest;
    try {
        std::map<std::string, std::string> kv;
        if (!manifest_path.empty()) kv = parse_key_values(io_detail::slurp(manifest_path));
        for (const auto& [k, v] : overrides) kv[k] = v;
        manifest = build_manifest(kv);
    } catch (const InvalidManifest& e) {
        std::fprintf(stderr, "invalid manifest: %s\n", e.what());
        return kExitInvalidManifest;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "invalid manifest: %s\n", e.what());
        return kExitInvalidManifest;
    }
    const RunOutcome outcome = run(manifest);
    std::printf("%s\n", outcome.status.c_str());
    for (const auto& f : outcome.files) std::printf("wrote %s\n", f.string().c_str());
    return outcome.exit_code;
}

int do_compare(const std::string& a, const std::string& b, std::optional<double> tol) {
    const auto r = kerrwig::compare_files(a, b);
    std::printf("kind %s samples %zu sup %.6e l1_mean %.6e\n", r.kind.c_str(), r.samples, r.sup, r.l1_mean);
    if (tol && r.sup > *tol) {
        std::printf("over tolerance %.6e\n", *tol);
        return kerrwig::kExitOverTolerance;
    }
    return kerrwig::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wigner-function evolution in a Kerr medium"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "evolve or evaluate a manifest");
    std::string manifest_path;
    run_cmd->add_option("manifest", manifest_path, "key=value manifest file");
    const std::pair<const char*, const char*> flags[] = {
        {"--alpha-re", "alpha_re"}, {"--alpha-im", "alpha_im"}, {"--xi", "xi"},         {"--thermal-n", "thermal_n"},
        {"--dtau", "dtau"},         {"--grid", "grid"},         {"--rmax", "rmax"},     {"--method", "method"},
        {"--snapshots", "snapshots"}, {"--out", "out"},         {"--profile", "profile"}};
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    for (const auto& [flag, key] : flags) options[key] = run_cmd->add_option(flag, values[key], std::string("sets ") + key);

    auto* cmp_cmd = app.add_subcommand("compare", "sup and mean absolute difference of two output files");
    std::string file_a, file_b;
    std::optional<double> tol;
    cmp_cmd->add_option("file_a", file_a)->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("file_b", file_b)->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("--tol", tol, "exit 4 when the sup difference exceeds this");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kerrwig::kExitInvalidManifest;
    }

    try {
        if (*run_cmd) {
            std::map<std::string, std::string> overrides;
            for (const auto& [key, opt] : options)
                if (opt->count() > 0) overrides[key] = values[key];
            return do_run(manifest_path, overrides);
        }
        return do_compare(file_a, file_b, tol);
    } catch (const kerrwig::HeaderMismatch& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
