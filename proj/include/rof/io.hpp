#pragma once

#include <string>
#include <vector>

#include "rof/common.hpp"
#include "rof/fiber.hpp"

namespace rof {

struct UePosition;  // positioning.hpp

/// Measurement file: CSV with header `freq_hz,magnitude_db,group_delay_s`,
/// rows ascending in frequency.
RawMeasurement read_measurement(const std::string& path);
void write_measurement(const std::string& path, const RawMeasurement& meas);

/// Channel export: measurement columns plus `phase_rad`.
void write_channel(const std::string& path, const ArrayXd& freqs, const ArrayXd& magnitude_db,
                   const ArrayXd& group_delay, const ArrayXd& phase);

/// Trajectory file: CSV with header `px_m,py_m`.
std::vector<UePosition> read_trajectory(const std::string& path, double ue_z);

/// Full-precision float -> text ("%.17g"); all CSV output goes through this
/// so identical runs produce identical bytes.
std::string format_double(double v);

/// Writes via a temp file in the same directory, then renames.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// FNV-1a 64-bit, used to stamp outputs with the scenario they came from.
std::uint64_t fnv1a64(const std::string& text);

}  // namespace rof
