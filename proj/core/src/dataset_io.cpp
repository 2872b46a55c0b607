#include "mra/dataset_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "mra/error.hpp"

namespace mra {

static_assert(std::endian::native == std::endian::little, "binary datasets assume little endian");

namespace {

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error("truncated MRA1 dataset");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidArgument("malformed number in dataset: '" + std::string(s) + "'");
  return v;
}

}  // namespace

void write_dataset_binary(std::ostream& out, const Dataset& data) {
  out.write("MRA1", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.config.length));
  put<std::uint64_t>(out, data.count);
  put<double>(out, data.config.sigma);
  out.write(reinterpret_cast<const char*>(data.observations.data()),
            static_cast<std::streamsize>(data.observations.size() * sizeof(double)));
  if (!out) throw Error("failed writing MRA1 dataset");
}

Dataset read_dataset_binary(std::istream& in, GroupKind group) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MRA1", 4) != 0)
    throw InvalidArgument("not an MRA1 dataset");
  Dataset data;
  data.config.length = get<std::uint32_t>(in);
  data.count = get<std::uint64_t>(in);
  data.config.sigma = get<double>(in);
  data.config.group = group;
  data.config.validate();
  data.observations.resize(data.count * data.config.length);
  if (!in.read(reinterpret_cast<char*>(data.observations.data()),
               static_cast<std::streamsize>(data.observations.size() * sizeof(double))))
    throw Error("truncated MRA1 dataset");
  return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "# MRA1 L=" << data.config.length << " n=" << data.count
      << " sigma=" << format_double(data.config.sigma) << '\n';
  for (std::size_t i = 0; i < data.count; ++i) {
    const auto row = data.observation(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out << ',';
      out << format_double(row[k]);
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing dataset CSV");
}

Dataset read_dataset_csv(std::istream& in, GroupKind group) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# MRA1", 0) != 0)
    throw InvalidArgument("dataset CSV must start with a '# MRA1' header");
  Dataset data;
  data.config.group = group;
  std::istringstream header(line.substr(6));
  std::string field;
  std::size_t expected = 0;
  bool have_l = false, have_sigma = false;
  while (header >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "L") {
      data.config.length = std::stoul(value);
      have_l = true;
    } else if (key == "n") {
      expected = std::stoull(value);
    } else if (key == "sigma") {
      data.config.sigma = parse_double(value);
      have_sigma = true;
    }
  }
  if (!have_l || !have_sigma) throw InvalidArgument("dataset CSV header needs L and sigma");
  data.config.validate();
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::size_t columns = 0, start = 0;
    while (start <= line.size()) {
      const auto comma = line.find(',', start);
      const auto stop = comma == std::string::npos ? line.size() : comma;
      data.observations.push_back(parse_double(std::string_view(line).substr(start, stop - start)));
      ++columns;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (columns != data.config.length)
      throw InvalidArgument("dataset CSV row with " + std::to_string(columns) +
                            " values, expected " + std::to_string(data.config.length));
    ++data.count;
  }
  if (expected != 0 && expected != data.count)
    throw InvalidArgument("dataset CSV header announces " + std::to_string(expected) +
                          " rows but has " + std::to_string(data.count));
  return data;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  const bool csv = path.extension() == ".csv";
  std::ofstream out(path, csv ? std::ios::out : std::ios::out | std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  if (csv)
    write_dataset_csv(out, data);
  else
    write_dataset_binary(out, data);
}

Dataset read_dataset(const std::filesystem::path& path, GroupKind group) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char head[4] = {};
  in.read(head, 4);
  in.clear();
  in.seekg(0);
  if (std::memcmp(head, "MRA1", 4) == 0) return read_dataset_binary(in, group);
  return read_dataset_csv(in, group);
}

}  // namespace mra
