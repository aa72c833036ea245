// trimodal: build a tri-modal hybrid index, search it, and evaluate
// retrieval quality over BEIR-format datasets.

#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trimodal/trimodal.hpp"

namespace {

int exit_code_for(trimodal::ErrorKind kind) {
    switch (kind) {
        case trimodal::ErrorKind::Usage: return 1;
        case trimodal::ErrorKind::External: return 3;
        default: return 2;  // data, format and mismatch errors
    }
}

// --set fusion.gamma=0 style overrides applied onto the config JSON before
// parsing. Values are parsed as JSON when possible, else taken as strings.
void apply_overrides(nlohmann::json& j, const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            trimodal::fail(trimodal::ErrorKind::Usage, "--set expects key.path=value, got: " + kv);
        }
        std::string path = kv.substr(0, eq);
        std::string value = kv.substr(eq + 1);
        nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
        if (parsed.is_discarded()) parsed = value;

        nlohmann::json* node = &j;
        std::size_t start = 0;
        while (true) {
            std::size_t dot = path.find('.', start);
            std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
            if (key.empty()) {
                trimodal::fail(trimodal::ErrorKind::Usage, "--set has an empty path segment: " + kv);
            }
            if (dot == std::string::npos) {
                (*node)[key] = parsed;
                break;
            }
            node = &(*node)[key];
            start = dot + 1;
        }
    }
}

trimodal::PipelineConfig load_with_overrides(const std::string& config_path,
                                             const std::vector<std::string>& overrides) {
    std::ifstream f(config_path);
    if (!f) trimodal::fail(trimodal::ErrorKind::Usage, "cannot open config file: " + config_path);
    nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        trimodal::fail(trimodal::ErrorKind::Usage, "config is not a JSON object: " + config_path);
    }
    apply_overrides(j, overrides);
    return trimodal::parse_config(
        j, std::filesystem::absolute(std::filesystem::path(config_path)).parent_path());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tri-modal hybrid retrieval engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string query_text;
    std::size_t k = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "pipeline config (JSON)")->required();
        cmd->add_option("--set", overrides, "override a config field, e.g. --set fusion.gamma=0");
    };

    CLI::App* cmd_index = app.add_subcommand("index", "build and save the hybrid index");
    add_common(cmd_index);

    CLI::App* cmd_search = app.add_subcommand("search", "run one query against a saved index");
    add_common(cmd_search);
    cmd_search->add_option("-q,--query", query_text, "query text")->required();
    cmd_search->add_option("-k", k, "number of results (default: config k)");

    CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate retrieval over a dataset");
    add_common(cmd_eval);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        trimodal::PipelineConfig cfg = load_with_overrides(config_path, overrides);

        if (cmd_index->parsed()) {
            auto report = trimodal::pipeline::cmd_index(cfg, &std::cerr);
            std::cout << "indexed " << report.doc_count << " documents (vocabulary " << report.vocab_size
                      << " terms, " << report.entity_count << " entities)\n"
                      << "index: " << cfg.index_path.string() << "\n";
        } else if (cmd_search->parsed()) {
            std::size_t top_k = k > 0 ? k : cfg.k;
            auto out = trimodal::pipeline::cmd_search(cfg, query_text, top_k, &std::cerr);
            if (out.weights) {
                std::cout << "weights: semantic=" << out.weights->semantic
                          << " lexical=" << out.weights->lexical << " graph=" << out.weights->graph
                          << (out.fallback ? " (static fallback)" : "") << "\n";
            }
            std::cout << std::fixed << std::setprecision(6);
            for (const auto& line : out.lines) {
                std::cout << line.rank << "\t" << line.doc_id << "\t" << line.score << "\t"
                          << line.title << "\n";
            }
        } else if (cmd_eval->parsed()) {
            auto result = trimodal::pipeline::cmd_eval(cfg, &std::cerr);
            std::cout << result.report_text;
            std::cout << "outputs in " << cfg.output_dir.string() << "\n";
        }
        return 0;
    } catch (const trimodal::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
