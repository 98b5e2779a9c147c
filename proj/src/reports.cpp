#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "fintwit/common.hpp"
#include "fintwit/harness.hpp"

namespace fintwit::harness {

namespace {

// Table rows track the paper-style report shape; Doc2Vec variants are out
// of scope and always rendered n/a.
const std::vector<std::pair<std::string, std::optional<feat::FeatureSet>>>& table_rows() {
    static const std::vector<std::pair<std::string, std::optional<feat::FeatureSet>>> rows = {
        {"Proposed feature matrix", feat::FeatureSet::kProposed},
        {"BOW 8", feat::FeatureSet::kBow8},
        {"BOW 16", feat::FeatureSet::kBow16},
        {"BOW 24", feat::FeatureSet::kBow24},
        {"DOC2VEC 8", std::nullopt},
        {"DOC2VEC 16", std::nullopt},
        {"DOC2VEC 24", std::nullopt},
        {"Sentiment + Price", feat::FeatureSet::kSentimentPrice},
        {"Price only", feat::FeatureSet::kPriceOnly},
    };
    return rows;
}

std::string fmt(double v, const char* spec = "%.3f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FatalError("cannot write report file: " + path);
    return out;
}

void write_accuracy_table(const RunReport& report, const ExperimentConfig& config,
                          const std::string& path) {
    // cell lookup: (ticker, fs, arch) -> mean accuracy for each section
    struct Acc {
        double train = -1, val = -1, test = -1;
        bool ok = false;
    };
    std::map<std::string, Acc> by_key;
    for (const auto& c : report.cells) {
        if (c.failed) continue;
        Acc a;
        a.train = c.mean_train_acc;
        a.val = c.mean_val_acc;
        a.test = c.mean_test_acc;
        a.ok = true;
        by_key[c.ticker + "|" + feat::feature_set_name(c.feature_set) + "|" +
               nnet::arch_name(c.arch)] = a;
    }

    auto out = open_out(path);
    out << "section,feature_set";
    for (const auto& t : config.tickers) {
        out << ',' << t.symbol << ":cnn," << t.symbol << ":cnn_lstm";
    }
    out << '\n';

    const std::vector<std::pair<std::string, std::string>> sections = {
        {"test", "test"}, {"validation", "validation"}, {"train", "train"}};
    for (const auto& [section, _] : sections) {
        for (const auto& [row_name, fs] : table_rows()) {
            out << section << ',' << row_name;
            for (const auto& t : config.tickers) {
                for (const char* arch : {"cnn", "cnn_lstm"}) {
                    std::string v = "n/a";
                    if (fs) {
                        const auto it = by_key.find(t.symbol + "|" + feat::feature_set_name(*fs) +
                                                    "|" + arch);
                        if (it != by_key.end() && it->second.ok) {
                            const Acc& a = it->second;
                            v = fmt(section == "test" ? a.test
                                    : section == "validation" ? a.val
                                                              : a.train);
                        }
                    }
                    out << ',' << v;
                }
            }
            out << '\n';
        }
    }
}

void write_importance_tables(const RunReport& report, const std::string& outdir) {
    bool any_feature = false, any_time = false;
    for (const auto& e : report.explanations) {
        if (e.feature_table.values.size() > 0) any_feature = true;
        if (e.time_table.values.size() > 0) any_time = true;
    }
    if (any_feature) {
        auto out = open_out(outdir + "/feature_importance.csv");
        out << "feature";
        for (const auto& e : report.explanations) out << ',' << e.ticker;
        out << '\n';
        const auto& keys = report.explanations.front().feature_table.keys;
        for (std::size_t i = 0; i < keys.size(); ++i) {
            out << keys[i];
            for (const auto& e : report.explanations) {
                out << ','
                    << (e.feature_table.values.size() > 0
                            ? fmt(e.feature_table.values(static_cast<Eigen::Index>(i)), "%.6f")
                            : std::string("n/a"));
            }
            out << '\n';
        }
    }
    if (any_time) {
        auto out = open_out(outdir + "/time_importance.csv");
        out << "time_period";
        for (const auto& e : report.explanations) out << ',' << e.ticker;
        out << '\n';
        for (int i = 0; i < feat::kRows; ++i) {
            out << feat::row_times()[i] << (i < 8 ? " (Market Closed)" : " (Market Open)");
            for (const auto& e : report.explanations) {
                out << ','
                    << (e.time_table.values.size() > 0
                            ? fmt(e.time_table.values(i), "%.6f")
                            : std::string("n/a"));
            }
            out << '\n';
        }
    }
}

void write_series_csv(const TickerExplanation& e, const std::vector<std::string>& names,
                      const std::string& path) {
    auto out = open_out(path);
    out << "day";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (const auto& row : e.series) {
        out << row.day.to_string();
        for (Eigen::Index c = 0; c < row.feature_mass.size(); ++c) {
            out << ',' << fmt(row.feature_mass(c), "%.6f");
        }
        out << '\n';
    }
}

std::string series_color(std::size_t i, std::size_t n) {
    // Evenly spaced hues, converted to rgb for plain SVG 1.1.
    const double h = 360.0 * static_cast<double>(i) / static_cast<double>(n);
    const double s = 0.72, v = 0.82;
    const int hi = static_cast<int>(h / 60.0) % 6;
    const double f = h / 60.0 - static_cast<int>(h / 60.0);
    const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
    double r = 0, g = 0, b = 0;
    switch (hi) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        case 5: r = v; g = p; b = q; break;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", static_cast<int>(r * 255),
                  static_cast<int>(g * 255), static_cast<int>(b * 255));
    return buf;
}

// One polyline per feature, correct predictions only.
void write_series_svg(const TickerExplanation& e, const std::vector<std::string>& names,
                      const std::string& path) {
    const int width = 960, height = 440;
    const int ml = 50, mr = 170, mt = 30, mb = 30;
    const int plot_w = width - ml - mr, plot_h = height - mt - mb;

    double max_v = 1e-12;
    for (const auto& row : e.series) max_v = std::max(max_v, row.feature_mass.maxCoeff());
    const std::size_t n_pts = e.series.size();

    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << ml << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">"
        << "Per-instance feature importance, " << e.ticker
        << " (correct test predictions)</text>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w
        << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << mt + plot_h << "\" stroke=\"black\"/>\n";

    for (std::size_t f = 0; f < names.size(); ++f) {
        out << "<polyline fill=\"none\" stroke=\"" << series_color(f, names.size())
            << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t k = 0; k < n_pts; ++k) {
            const double x =
                ml + (n_pts <= 1 ? 0.0
                                 : plot_w * static_cast<double>(k) /
                                       static_cast<double>(n_pts - 1));
            const double y =
                mt + plot_h -
                plot_h * (e.series[k].feature_mass(static_cast<Eigen::Index>(f)) / max_v);
            out << fmt(x, "%.1f") << ',' << fmt(y, "%.1f") << ' ';
        }
        out << "\"/>\n";
        const double ly = mt + 14.0 * static_cast<double>(f);
        out << "<rect x=\"" << ml + plot_w + 10 << "\" y=\"" << ly << "\" width=\"10\""
            << " height=\"10\" fill=\"" << series_color(f, names.size()) << "\"/>\n";
        out << "<text x=\"" << ml + plot_w + 24 << "\" y=\"" << ly + 9
            << "\" font-family=\"sans-serif\" font-size=\"10\">" << names[f] << "</text>\n";
    }
    out << "</svg>\n";
}

nlohmann::ordered_json report_to_json(const RunReport& report) {
    nlohmann::ordered_json j;
    auto cells = nlohmann::ordered_json::array();
    for (const auto& c : report.cells) {
        nlohmann::ordered_json jc;
        jc["ticker"] = c.ticker;
        jc["feature_set"] = feat::feature_set_name(c.feature_set);
        jc["arch"] = nnet::arch_name(c.arch);
        jc["failed"] = c.failed;
        if (c.failed) {
            jc["error"] = c.error;
        } else {
            jc["chosen_l2"] = c.chosen_l2;
            auto grid = nlohmann::ordered_json::array();
            for (const auto& [l2, acc] : c.grid_log) grid.push_back({{"l2", l2}, {"val_acc", acc}});
            jc["grid"] = std::move(grid);
            jc["train_acc"] = c.train_acc;
            jc["val_acc"] = c.val_acc;
            jc["test_acc"] = c.test_acc;
            jc["mean_train_acc"] = c.mean_train_acc;
            jc["mean_val_acc"] = c.mean_val_acc;
            jc["mean_test_acc"] = c.mean_test_acc;
            jc["best_repeat"] = c.best_repeat;
        }
        cells.push_back(std::move(jc));
    }
    j["cells"] = std::move(cells);

    auto explanations = nlohmann::ordered_json::array();
    for (const auto& e : report.explanations) {
        nlohmann::ordered_json je;
        je["ticker"] = e.ticker;
        auto table = [](const explain::ImportanceTable& t) {
            nlohmann::ordered_json jt;
            jt["keys"] = t.keys;
            std::vector<double> vals(t.values.data(), t.values.data() + t.values.size());
            jt["values"] = vals;
            return jt;
        };
        je["feature_importance"] = table(e.feature_table);
        je["time_importance"] = table(e.time_table);
        je["n_attributions"] = e.attributions.size();
        je["n_correct"] = e.series.size();
        explanations.push_back(std::move(je));
    }
    j["explanations"] = std::move(explanations);
    j["any_failed"] = report.any_failed;
    return j;
}

}  // namespace

void emit_reports(const RunReport& report, const ExperimentConfig& config,
                  const std::string& outdir) {
    std::error_code ec;
    std::filesystem::create_directories(outdir, ec);
    if (ec) throw FatalError("cannot create output directory: " + outdir);

    write_accuracy_table(report, config, outdir + "/accuracy_table.csv");
    write_importance_tables(report, outdir);

    for (const auto& e : report.explanations) {
        if (e.feature_table.keys.empty()) continue;
        const auto& names = e.feature_table.keys;
        write_series_csv(e, names, outdir + "/instance_series_" + e.ticker + ".csv");
        write_series_svg(e, names, outdir + "/instance_series_" + e.ticker + ".svg");
        explain::write_attributions_jsonl(e.attributions,
                                          outdir + "/attributions_" + e.ticker + ".jsonl");
    }

    auto out = open_out(outdir + "/run_report.json");
    out << report_to_json(report).dump(2) << '\n';
}

}  // namespace fintwit::harness
