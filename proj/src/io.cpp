#include "rasa/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "rasa/errors.hpp"

namespace rasa {

namespace {

std::string format(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    return out;
}

}  // namespace

std::string format_full(double v) { return format("%.17g", v); }
std::string format_console(double v) { return format("%.4g", v); }

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
    std::ofstream out = open_out(path);
    out << "epoch,train_loss,dev_hits_at_1,dev_hits_at_10,dev_set_f1,dev_loss\n";
    for (const EpochRecord& r : history) {
        out << r.epoch << ',' << format_full(r.train_loss) << ',' << format_full(r.dev.hits_at_1)
            << ',' << format_full(r.dev.hits_at_10) << ',' << format_full(r.dev.set_f1) << ','
            << format_full(r.dev.loss) << '\n';
    }
}

void write_metrics_csv(const std::string& path, const MetricsRecord& rec) {
    std::ofstream out = open_out(path);
    out << "split,hits_at_1,hits_at_10,set_f1,loss,epoch\n";
    out << rec.split << ',' << format_full(rec.hits_at_1) << ',' << format_full(rec.hits_at_10)
        << ',' << format_full(rec.set_f1) << ',' << format_full(rec.loss) << ',' << rec.epoch
        << '\n';
}

void write_entropy_csv(const std::string& path, const EntropyReport& report) {
    std::ofstream out = open_out(path);
    out << "layer,entropy_nats,normalized,n\n";
    const double log_n = report.n > 1 ? std::log(static_cast<double>(report.n)) : 0.0;
    double mean = 0.0;
    for (std::size_t l = 0; l < report.per_layer_nats.size(); ++l) {
        const double h = report.per_layer_nats[l];
        mean += h;
        out << l << ',' << format_full(h) << ','
            << format_full(report.n > 1 ? h / log_n : 0.0) << ',' << report.n << '\n';
    }
    mean /= static_cast<double>(report.per_layer_nats.size());
    out << "mean," << format_full(mean) << ',' << format_full(report.normalized) << ','
        << report.n << '\n';
}

void write_ablation_csv(const std::string& path, const AblationReport& report) {
    std::ofstream out = open_out(path);
    out << "k,L,variant,seed,test_hits_at_1,dev_hits_at_1,chance_hits_at_1,best_epoch\n";
    for (const AblationCell& c : report.rows) {
        out << c.k << ',' << c.L << ',' << to_string(c.variant) << ',' << c.seed << ','
            << format_full(c.test_hits_at_1) << ',' << format_full(c.dev_hits_at_1) << ','
            << format_full(c.chance_hits_at_1) << ',' << c.best_epoch << '\n';
    }
}

void write_search_space_json(const std::string& path, const SearchSpaceReport& report) {
    nlohmann::json doc{{"n", report.n},
                       {"m", report.m},
                       {"standard_log2_patterns", report.standard_log2_patterns},
                       {"rasa_log2_patterns", report.rasa_log2_patterns},
                       {"rasa_with_self_log2_patterns", report.rasa_with_self_log2_patterns}};
    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
}

std::string content_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

}  // namespace rasa
