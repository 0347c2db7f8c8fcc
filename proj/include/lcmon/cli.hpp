#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lcmon/dsp.hpp"
#include "lcmon/features.hpp"

namespace lcmon {

// Everything a pipeline run needs to be reproduced: DSP parameters, catalog
// composition, model locations, line parameters and the base seed. Commands
// load it from --manifest, apply explicit flag overrides, and serialize the
// effective copy alongside their outputs.
struct RunManifest {
    DspConfig dsp;
    CatalogConfig catalog;
    std::string classifier_model;
    std::string wet_model;
    std::string dry_model;
    double u_ph_kv = 63.5;
    double r = 1.6;
    double sigma_default_kv = 14.0;
    std::uint64_t seed = 0;
};

RunManifest read_run_manifest(const std::string& path);
void write_run_manifest(const RunManifest& m, const std::string& path);

// Entry point behind the `lcmon` binary. `args` excludes the program name.
// Returns 0 on success, 1 on validation failures, 2 on I/O failures.
int run_cli(const std::vector<std::string>& args);

}  // namespace lcmon
