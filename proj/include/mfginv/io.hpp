#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfginv/forward.hpp"
#include "mfginv/grid.hpp"
#include "mfginv/inverse.hpp"

namespace mfginv {

/// Decimal text with 17 significant digits; round-trips every double.
std::string format_double(double v);

/// `x,value` rows.
void write_spatial_csv(const std::filesystem::path& path, const SpatialField& f);
/// `t,x,value` rows, time-major.
void write_spacetime_csv(const std::filesystem::path& path, const SpaceTimeField& f);

/// Reads the value column of an `x,value` file and checks it against `grid`
/// (node count and coordinates within 1e-9 relative).
SpatialField read_spatial_csv(const std::filesystem::path& path, const Grid& grid);

/// `iter,residual,hjb_fp_solves,elapsed_seconds`.
void write_forward_history_csv(const std::filesystem::path& path, const ForwardResult& r);

/// `k,meas_rel_err,q_rel_err,forward_residual,hjb_fp_solves_cum,elapsed_seconds`,
/// followed by `level,fine_equiv_solves` when `hierarchical`. A missing
/// q_rel_err is written as an empty cell.
void write_inverse_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history,
                               bool hierarchical);

/// `x,q_minus_qhat,correction,error,pec`.
void write_diagnostics_csv(const std::filesystem::path& path, const UpdateDiagnostics& d);

/// Writes `text` to `path`, creating parent directories; LF line endings.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mfginv
