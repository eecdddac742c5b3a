#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "anova/app.hpp"

namespace {

std::string flag_name(const std::string& key) {
    std::string out = "--" + key;
    for (char& ch : out)
        if (ch == '_') ch = '-';
    return out;
}

// Converts a flag value to JSON of the same kind as the key's default.
nlohmann::json flag_value(const nlohmann::json& like, const std::string& text) {
    if (like.is_string()) return text;
    if (like.is_array()) {
        nlohmann::json arr = nlohmann::json::array();
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) arr.push_back(nlohmann::json::parse(item));
        return arr;
    }
    return nlohmann::json::parse(text);
}

}  // namespace

int main(int argc, char** argv) {
    using anova::app::ConfigError;
    namespace app = anova::app;

    CLI::App cli{"Nonlocal denoising with ANOVA kernels"};
    std::string command;
    std::string config_path;
    bool dump = false;
    cli.add_option("command", command,
                   "denoise | train | validate | spectra | bench-op | bench-solve | iteration-table");
    cli.add_option("-c,--config", config_path, "JSON config file");
    cli.add_flag("--dump-config", dump, "Print the effective config as JSON and exit");

    const nlohmann::json defaults = app::to_json(app::RunConfig{});
    std::map<std::string, std::string> overrides;
    std::map<std::string, CLI::Option*> options;
    for (const auto& item : defaults.items()) {
        if (item.key() == "command") continue;
        options[item.key()] = cli.add_option(flag_name(item.key()), overrides[item.key()], "config key " + item.key());
    }

    try {
        cli.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.exit(e);
    } catch (const CLI::ParseError& e) {
        cli.exit(e);
        return app::config_error;
    }

    app::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = app::load_config(config_path);
        nlohmann::json patch = nlohmann::json::object();
        if (!command.empty()) patch["command"] = command;
        for (const auto& [key, opt] : options) {
            if (opt->count() == 0) continue;
            try {
                patch[key] = flag_value(defaults[key], overrides[key]);
            } catch (const nlohmann::json::exception&) {
                throw ConfigError("cannot parse value '" + overrides[key] + "' for " + flag_name(key));
            }
        }
        cfg = app::config_from_json(patch, cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return app::config_error;
    }

    if (dump) {
        std::cout << app::to_json(cfg).dump(2) << '\n';
        return app::ok;
    }
    return app::run(cfg, std::cout, std::cerr);
}
