#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "km/cli.hpp"

namespace {

struct Leaf {
    std::string command;
    std::string help;
    std::vector<std::string> keys;
    std::vector<std::string> flags;  // valueless switches
};

const std::vector<Leaf>& leaves() {
    static const std::vector<Leaf> l = {
        {"lagrange", "Equilibria and the first critical value", {"mu", "n", "format", "out"}, {}},
        {"hill", "Connected components of the Hill region", {"mu", "c", "grid", "bounds", "format", "out", "csv", "svg"}, {}},
        {"orbit", "Integrate one trajectory", {"mu", "n", "q", "p", "t-end", "tol", "samples", "format", "out", "csv"}, {}},
        {"moser check-vf", "Moser vector-field identity residual", {"c", "n", "samples", "seed", "format", "out"}, {}},
        {"moser embed", "Regularized Kepler flow against great circles", {"n", "q", "p", "samples", "tol", "seed", "format", "out"}, {}},
        {"symmetric", "Shoot a symmetric periodic orbit", {"mu", "c", "q1", "bracket", "branch", "tol", "format", "out", "csv"}, {}},
        {"observe", "Twisted-loop symmetry residual of a symmetric orbit",
         {"mu", "c", "q1", "bracket", "branch", "tol", "samples", "format", "out", "csv"}, {"no-rho"}},
        {"starshape", "Fiberwise star-shapedness check", {"mu", "c", "n", "bases", "rays", "seed", "format", "out"}, {}},
        {"convexity", "Fiberwise convexity check", {"mu", "c", "n", "bases", "rays", "seed", "format", "out"}, {}},
        {"homology group", "Group homology with twisted coefficients",
         {"group", "m", "tau-sign", "refl-sign", "max-deg", "path", "format", "out"}, {}},
        {"homology loopspace", "Equivariant loop-space homology table",
         {"n", "action", "max-deg", "m-range", "tau-rule", "refl-rule", "path", "bo2", "format", "out"}, {}},
        {"homology corollary", "Equivariant symplectic homology below the first critical value",
         {"max-deg", "m-range", "tau-rule", "refl-rule", "path", "bo2", "format", "out"}, {"spatial"}},
    };
    return l;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"km: regularized restricted three-body toolkit"};
    app.set_version_flag("--version", km::cli::kVersion);
    app.require_subcommand(1);

    struct Bound {
        const Leaf* leaf;
        CLI::App* app;
        std::map<std::string, std::string> values;
        std::map<std::string, bool> switches;
        std::string config;
    };
    std::vector<Bound> bound;
    bound.reserve(leaves().size());
    std::map<std::string, CLI::App*> groups;

    for (const Leaf& leaf : leaves()) {
        CLI::App* parent = &app;
        std::string name = leaf.command;
        if (const auto sp = name.find(' '); sp != std::string::npos) {
            const std::string group = name.substr(0, sp);
            name = name.substr(sp + 1);
            auto it = groups.find(group);
            if (it == groups.end()) {
                CLI::App* g = app.add_subcommand(group, group + " commands");
                g->require_subcommand(1);
                it = groups.emplace(group, g).first;
            }
            parent = it->second;
        }
        bound.push_back({&leaf, parent->add_subcommand(name, leaf.help), {}, {}, {}});
    }
    for (Bound& b : bound) {
        for (const auto& key : b.leaf->keys) b.app->add_option("--" + key, b.values[key]);
        for (const auto& key : b.leaf->flags) b.app->add_flag("--" + key, b.switches[key]);
        b.app->add_option("--config", b.config, "key = value file; flags override it");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : km::cli::kValidation;
    }

    for (Bound& b : bound) {
        if (!b.app->parsed()) continue;
        km::cli::RunConfig cfg;
        cfg.command = b.leaf->command;
        try {
            if (!b.config.empty()) cfg.params = km::cli::read_config_file(b.config);
        } catch (const km::ValidationError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return km::cli::kValidation;
        } catch (const km::IoError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return km::cli::kIo;
        }
        for (const auto& key : b.leaf->keys)
            if (b.app->count("--" + key) > 0) cfg.params[key] = b.values[key];
        for (const auto& key : b.leaf->flags)
            if (b.app->count("--" + key) > 0) cfg.params[key] = "true";
        const auto res = km::cli::run(cfg, std::cout, &std::cerr);
        if (!res.error.empty()) std::cerr << "error: " << res.error << '\n';
        return res.exit_code;
    }
    return km::cli::kValidation;
}
