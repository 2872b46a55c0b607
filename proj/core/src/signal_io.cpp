#include "mra/signal_io.hpp"

#include <cmath>
#include <fstream>

#include "mra/error.hpp"

namespace mra {

nlohmann::json signal_to_json(const Signal& s) {
  for (double v : s.values())
    if (!std::isfinite(v)) throw InvalidArgument("cannot serialize a non-finite signal value");
  return {{"L", s.size()},
          {"format", "standard-parametrization"},
          {"first_index", s.first()},
          {"support", s.support()},
          {"values", std::vector<double>(s.values().begin(), s.values().end())}};
}

Signal signal_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "standard-parametrization")
    throw InvalidArgument("signal record must have format \"standard-parametrization\"");
  const auto length = j.at("L").get<std::size_t>();
  if (length == 0) throw InvalidArgument("signal record with L = 0");
  const auto support = j.value("support", std::vector<Index>{});
  if (!j.contains("values")) throw InvalidArgument("signal record without values");
  auto values = j.at("values").get<std::vector<double>>();
  Signal s(length);
  if (values.size() == length) {
    s = Signal(std::move(values));
    if (j.contains("support") && s.support() != [&] {
          std::vector<Index> sorted;
          for (Index i : support) sorted.push_back(standard(i, length));
          std::sort(sorted.begin(), sorted.end());
          return sorted;
        }())
      throw InvalidArgument("signal record support does not match its nonzero values");
  } else if (values.size() == support.size()) {
    // Sparse form: values aligned with the support list.
    s = Signal::from_support(length, support, values);
  } else {
    throw InvalidArgument("signal record values must have length L or match the support");
  }
  return s;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Signal read_signal(const std::filesystem::path& path) { return signal_from_json(read_json(path)); }

void write_signal(const std::filesystem::path& path, const Signal& s) {
  write_json(path, signal_to_json(s));
}

}  // namespace mra
