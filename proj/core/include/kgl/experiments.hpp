#pragma once

#include <string>
#include <vector>

#include "kgl/config.hpp"

namespace kgl {

struct RunOutcome {
  int exit_code = 0;
  std::string error_kind;               // empty on success
  std::string message;                  // error text or one-line summary
  std::vector<std::string> violations;  // nonempty only for the validate verb
  std::vector<std::string> outputs;     // files written, relative to out_dir
};

// Dispatch on cfg.experiment.  A run validates the config, executes the named
// experiment and writes its data tables plus manifest.json and a canonical
// config.ini echo under cfg.out_dir (all writes temp + rename).  Module errors
// are caught, recorded to error.json in the run directory, and mapped onto the
// exit code.  The validate verb only reports violations and never writes.
RunOutcome run_experiment(const ExperimentConfig& cfg);

std::string error_record_json(const std::string& kind, int exit_code, const std::string& message);

}  // namespace kgl
