#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "protoid/eval.hpp"

namespace protoid {

/// Long format: model,channel,snr_db,accuracy,trials.
std::string sweep_csv(const std::vector<SweepResult>& results);

/// Long format: model,channel,snr_db,truth,predicted,count.
std::string confusion_csv(const std::vector<SweepResult>& results, const std::vector<std::string>& class_names);

/// Accuracy-vs-SNR line chart, one series per (model, channel).
std::string accuracy_plot_svg(const std::vector<SweepResult>& results, const std::string& title = "");

/// Row-normalized heatmap with counts in each cell.
std::string confusion_svg(const ConfusionMatrix& cm, const std::vector<std::string>& class_names,
                          const std::string& title = "");

/// Validates every input, then writes sweep.csv, confusion.csv,
/// accuracy_vs_snr.svg and one confusion heatmap per (model, channel) at the
/// highest SNR. Nothing is written when validation fails, and files already
/// written are removed if a later write fails. Returns the written paths.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& out_dir,
                                                const std::vector<SweepResult>& results);

/// Class names for an n-class head: b, g, n, ax[, noise].
std::vector<std::string> class_names(Index num_classes);

}  // namespace protoid
