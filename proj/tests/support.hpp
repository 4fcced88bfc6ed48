#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lpbias/mock_backend.hpp"
#include "lpbias/stimuli.hpp"

namespace testing_support {

inline std::string fixture(const std::string& name) { return std::string(LPBIAS_FIXTURES) + "/" + name; }
inline std::string data_file(const std::string& name) { return std::string(LPBIAS_DATA_DIR) + "/" + name; }

// A loopback port that was free a moment ago and has no listener.
inline int closed_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() /
           ("lpbias-" + tag + "-" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(p);
  return p;
}

// Distribution over `tokens` with the named entries pinned and the rest of
// the mass spread evenly.
inline std::map<std::string, double> dist(const std::map<std::string, double>& pinned,
                                          const std::vector<std::string>& rest) {
  std::map<std::string, double> d = pinned;
  double used = 0;
  for (const auto& [t, p] : pinned) used += p;
  for (const auto& t : rest) d[t] = (1.0 - used) / static_cast<double>(rest.size());
  return d;
}

// Random distribution over `tokens` with every entry strictly positive.
inline std::map<std::string, double> random_dist(const std::vector<std::string>& tokens,
                                                 std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::map<std::string, double> d;
  double z = 0;
  for (const auto& t : tokens) z += d[t] = u(gen);
  for (auto& [t, p] : d) p /= z;
  return d;
}

// Query text the mock expects: tokens of the template with fills.
inline std::string sentence(const std::string& tmpl, const std::string& target,
                            const std::string& attribute) {
  std::istringstream in(tmpl);
  std::string tok, out;
  while (in >> tok) {
    if (tok == "[TARGET]") tok = target.empty() ? "[MASK]" : target;
    if (tok == "[ATTRIBUTE]") tok = attribute.empty() ? "[MASK]" : attribute;
    out += (out.empty() ? "" : " ") + tok;
  }
  return out;
}

inline std::size_t word_index(const std::string& tmpl, const std::string& placeholder) {
  std::istringstream in(tmpl);
  std::string tok;
  std::size_t i = 0;
  while (in >> tok) {
    if (tok == placeholder) return i;
    ++i;
  }
  return i;
}

}  // namespace testing_support
