// Command line front end: declarative scenario configs in, CSV/JSON out.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fpklab/fpklab.hpp"

namespace {

std::string resolve_config(const std::string& arg) {
    if (std::filesystem::exists(arg)) return fpklab::read_text_file(arg);
    const auto& bundled = fpklab::bundled_scenarios();
    auto it = bundled.find(arg);
    if (it != bundled.end()) return it->second;
    throw fpklab::ConfigError("no such config file or bundled scenario: " + arg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fpklab: nonlinear drift-diffusion laboratory"};
    app.require_subcommand(1);

    std::string config;
    std::string base_dir = ".";

    CLI::App* run = app.add_subcommand("run", "run a scenario config (path or bundled name)");
    run->add_option("config", config, "config file path or bundled scenario name")->required();
    run->add_option("--base-dir", base_dir, "directory the output tree is rooted at");

    CLI::App* validate = app.add_subcommand("validate", "parse and validate a config without running it");
    validate->add_option("config", config, "config file path or bundled scenario name")->required();

    CLI::App* list = app.add_subcommand("list-examples", "list bundled example scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& [name, text] : fpklab::bundled_scenarios()) {
                const auto nl = text.find('\n');
                std::string headline = text.substr(0, nl);
                if (!headline.empty() && headline[0] == '#') headline = headline.substr(1);
                std::cout << name << " -" << headline << "\n";
            }
            return 0;
        }
        const std::string text = resolve_config(config);
        if (validate->parsed()) {
            fpklab::parse_scenario(text);
            std::cout << "ok\n";
            return 0;
        }
        const fpklab::RunResult res = fpklab::run_scenario_text(text, base_dir);
        std::cout << "output: " << res.output_dir << "\n";
        for (const auto& f : res.files) std::cout << "  " << f << "\n";
        for (const auto& m : res.messages) std::cerr << "warning: " << m << "\n";
        return res.exit_code;
    } catch (const fpklab::ConfigError& e) {
        std::cerr << "config error";
        if (e.line > 0) std::cerr << " (line " << e.line << ")";
        if (!e.field.empty()) std::cerr << " [" << e.field << "]";
        std::cerr << ": " << e.what() << "\n";
        return 1;
    } catch (const fpklab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
