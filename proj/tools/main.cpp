#include "wce/config.hpp"
#include "wce/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Chaos-expansion simulator: assumption checks, rate functions, tilted MC"};
    app.require_subcommand(1);

    std::string config_path;
    wce::CliOverrides overrides;
    std::uint64_t seed = 0;
    std::string out_dir;
    int threads = 0;
    std::string speed;

    CLI::App* run = app.add_subcommand("run", "execute a run configuration");
    run->add_option("config", config_path, "path to the JSON run configuration")->required();
    CLI::Option* seed_opt = run->add_option("--seed", seed, "override the master seed");
    CLI::Option* out_opt = run->add_option("--out", out_dir, "output directory");
    CLI::Option* thr_opt = run->add_option("--threads", threads, "worker thread count");
    CLI::Option* spd_opt =
        run->add_option("--speed", speed, "LDP speed convention")->check(CLI::IsMember({"eps", "eps2"}));

    CLI11_PARSE(app, argc, argv);

    if (*seed_opt) overrides.seed = seed;
    if (*out_opt) overrides.out_dir = out_dir;
    if (*thr_opt) overrides.threads = threads;
    if (*spd_opt) overrides.speed = speed;

    try {
        return wce::run_config(config_path, overrides);
    } catch (const std::exception& e) {
        std::cerr << "{\"error\": \"" << e.what() << "\"}\n";
        return 3;
    }
}
