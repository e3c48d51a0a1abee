#ifndef PULSESTAB_IO_HPP
#define PULSESTAB_IO_HPP

#include <string>
#include <vector>

#include "pulsestab/config.hpp"
#include "pulsestab/evolve.hpp"
#include "pulsestab/hamiltonian.hpp"
#include "pulsestab/index.hpp"
#include "pulsestab/model.hpp"
#include "pulsestab/spectrum.hpp"
#include "pulsestab/symplectic.hpp"

namespace pulsestab {

// JSON reports (UTF-8, keys in fixed alphabetical order).  Every report
// embeds the configuration hash and the library version.

std::string hypothesis_report_json(const HypothesisReport& report,
                                   const std::string& config_hash);
std::string index_report_json(const IndexReport& report,
                              const std::string& config_hash);
std::string spectrum_report_json(const SpectrumReport& report,
                                 const std::string& config_hash);
std::string evolution_run_json(const EvolutionRun& run,
                               const std::string& config_hash);

/// CSV rows: location, dim, signature, form eigenvalues.
std::string crossings_csv(const std::vector<CrossingRecord>& crossings);

/// CSV rows: re, im.
std::string eigenvalues_csv(const std::vector<std::complex<double>>& eigenvalues);

/// CSV of tau plus flattened frame columns.
std::string frame_path_csv(const FramePath& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace pulsestab

#endif
