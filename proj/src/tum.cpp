#include "dynba/tum.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dynba/error.hpp"

namespace dynba {

namespace {

constexpr double kSilentRenormalize = 1e-6;
constexpr double kMaxQuaternionDeviation = 1e-3;

}  // namespace

Trajectory read_tum(std::istream& in, std::vector<std::string>* warnings) {
  Trajectory traj;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    std::vector<double> v;
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || !std::isfinite(value)) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" + token + "'");
      }
      v.push_back(value);
    }
    if (v.size() != 8) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": expected 8 fields, got " + std::to_string(v.size()));
    }

    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    const double deviation = std::abs(q.norm() - 1.0);
    if (deviation > kMaxQuaternionDeviation) {
      throw Error(ErrorCode::NonUnitQuaternion,
                  "line " + std::to_string(line_no) + ": quaternion norm " + std::to_string(q.norm()));
    }
    if (deviation > kSilentRenormalize && warnings != nullptr) {
      warnings->push_back("line " + std::to_string(line_no) + ": renormalized quaternion with norm " +
                          std::to_string(q.norm()));
    }
    if (!traj.empty() && !(v[0] > traj.entries.back().timestamp)) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": timestamps must increase");
    }
    traj.entries.push_back({v[0], Pose(q, Eigen::Vector3d(v[1], v[2], v[3]))});
  }
  return traj;
}

Trajectory read_tum(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_tum(in, warnings);
}

void write_tum(std::ostream& out, const Trajectory& trajectory) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << std::fixed << std::setprecision(9);
  for (const auto& e : trajectory.entries) {
    const Eigen::Vector3d& t = e.pose.translation();
    const Eigen::Quaterniond& q = e.pose.rotation();
    buf << e.timestamp << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.x() << ' ' << q.y() << ' '
        << q.z() << ' ' << q.w() << '\n';
  }
  out << buf.str();
}

void write_tum(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_tum(out, trajectory);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace dynba
