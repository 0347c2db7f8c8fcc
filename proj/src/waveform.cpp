#include "lcmon/waveform.hpp"

#include <fstream>
#include <map>

#include "lcmon/errors.hpp"
#include "lcmon/text.hpp"

namespace lcmon {

void validate_waveform(const Waveform& w) {
    if (!(w.sample_rate > 0.0))
        throw InvalidArgument("waveform: sample_rate must be positive");
    if (!(w.mains_freq > 0.0))
        throw InvalidArgument("waveform: mains_freq must be positive");
    if (w.sample_rate < 20.0 * w.mains_freq)
        throw InvalidArgument("waveform: sample_rate must be >= 20x mains_freq");
    if (!(w.applied_voltage > 0.0))
        throw InvalidArgument("waveform: applied_voltage must be positive");
    // At least one full mains period of samples.
    if (static_cast<double>(w.samples.size()) * w.mains_freq + 1e-9 < w.sample_rate)
        throw InvalidArgument("waveform: record shorter than one mains period");
}

Waveform read_waveform_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open waveform file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    auto header = trim(line);
    if (header.empty() || header.front() != '#')
        throw IoError(path + ": missing '#' header line");
    header.remove_prefix(1);

    std::map<std::string, double, std::less<>> keys;
    for (auto tok : split(header, ' ')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        auto eq = tok.find('=');
        if (eq == std::string_view::npos)
            throw IoError(path + ": malformed header token '" + std::string(tok) + "'");
        keys.emplace(std::string(tok.substr(0, eq)), parse_double(tok.substr(eq + 1)));
    }
    for (const char* required : {"sample_rate", "mains_freq", "applied_voltage"}) {
        if (!keys.contains(required))
            throw IoError(path + ": header missing key '" + std::string(required) + "'");
    }

    Waveform w;
    w.sample_rate = keys.find("sample_rate")->second;
    w.mains_freq = keys.find("mains_freq")->second;
    w.applied_voltage = keys.find("applied_voltage")->second;

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty()) continue;
        try {
            w.samples.push_back(parse_double(t));
        } catch (const IoError&) {
            throw IoError(path + ":" + std::to_string(lineno) + ": bad sample value");
        }
    }
    return w;
}

void write_waveform_csv(const Waveform& w, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write waveform file: " + path);
    out << "# sample_rate=" << fmt_double(w.sample_rate)
        << " mains_freq=" << fmt_double(w.mains_freq)
        << " applied_voltage=" << fmt_double(w.applied_voltage) << "\n";
    for (double s : w.samples) out << fmt_double(s) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace lcmon
