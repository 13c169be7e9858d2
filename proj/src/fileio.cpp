#include "prodnet/fileio.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "prodnet/errors.hpp"

namespace prodnet {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  static std::atomic<unsigned long> counter{0};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ostringstream tmp_name;
  tmp_name << '.' << path.filename().string() << ".tmp." << ::getpid() << '.'
           << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.' << counter++;
  const auto tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace prodnet
