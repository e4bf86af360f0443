#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "srrl/reflect.hpp"

namespace srrl {

// Fixed column order; consumers parse by position.
inline const char* metrics_csv_header() {
  return "round,epoch,mean_reward,std_reward,max_reward,min_reward,objective,clip_fraction,skipped";
}

// Streams rows as training produces them.
class MetricsCsvWriter {
 public:
  explicit MetricsCsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write metrics csv: " + path.string());
    out_ << metrics_csv_header() << "\n";
  }

  void write(const MetricsRow& row) {
    out_.precision(17);
    out_ << row.round << "," << row.epoch << "," << row.mean_reward << "," << row.std_reward
         << "," << row.max_reward << "," << row.min_reward << "," << row.objective << ","
         << row.clip_fraction << "," << (row.skipped ? 1 : 0) << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

}  // namespace srrl
