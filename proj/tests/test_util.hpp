#ifndef EMOSCAST_TEST_UTIL_HPP
#define EMOSCAST_TEST_UTIL_HPP

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace test_util {

// Kolmogorov-Smirnov statistic against the uniform law on [0,1].
inline double ks_uniform(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double n = double(values.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double hi = double(i + 1) / n - values[i];
    const double lo = values[i] - double(i) / n;
    worst = std::max({worst, hi, lo});
  }
  return worst;
}

// Pearson chi-square statistic against equal expected counts.
inline double chi_square_uniform(const std::vector<long>& counts) {
  long total = 0;
  for (long c : counts)
    total += c;
  const double expected = double(total) / double(counts.size());
  double stat = 0.0;
  for (long c : counts) {
    const double d = double(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

// Fresh scratch directory under the system temp path, removed on
// destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& name) const {
    return (path_ / name).string();
  }

private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// Runs the CLI binary, redirecting output; returns the exit code.
inline int run_cli(const std::string& args,
                   const std::filesystem::path& log_path) {
  const std::string cmd = std::string(EMOSCAST_CLI_PATH) + " " + args + " > " +
                          log_path.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return status < 0 ? status : WEXITSTATUS(status);
}

} // namespace test_util

#endif
