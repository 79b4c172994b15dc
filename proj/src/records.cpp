#include "ontosim/records.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <string>

#include "json.hpp"
#include "ontosim/errors.hpp"

namespace ontosim::records {

using nlohmann::json;

Record flash_record(double t, std::vector<double> x, int label) {
  Record r;
  r.kind = Kind::flash;
  r.t = t;
  r.data = std::move(x);
  r.label = label;
  return r;
}

Record sample_record(double t, std::vector<double> q) {
  Record r;
  r.kind = Kind::sample;
  r.t = t;
  r.data = std::move(q);
  return r;
}

Record density_record(double t, int axes, int points_per_axis, double extent,
                      std::vector<double> values) {
  Record r;
  r.kind = Kind::density;
  r.t = t;
  r.axes = axes;
  r.points_per_axis = points_per_axis;
  r.extent = extent;
  r.data = std::move(values);
  return r;
}

namespace {

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::flash:
      return "flash";
    case Kind::sample:
      return "sample";
    case Kind::density:
      return "density";
  }
  return "?";
}

void validate_rows(const std::vector<Record>& rows) {
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Record& r = rows[i];
    auto complain = [&bad, i](const std::string& what) {
      bad.push_back("row " + std::to_string(i) + ": " + what);
    };
    if (!std::isfinite(r.t)) complain("time is not finite");
    for (double v : r.data)
      if (!std::isfinite(v)) {
        complain("non-finite value");
        break;
      }
    switch (r.kind) {
      case Kind::flash:
        if (r.label < 0) complain("flash label must be >= 0");
        if (r.data.empty()) complain("flash needs coordinates");
        break;
      case Kind::sample:
        if (r.data.empty()) complain("sample needs coordinates");
        break;
      case Kind::density: {
        if (r.axes < 1 || r.points_per_axis < 1 || !(r.extent > 0.0)) {
          complain("density metadata invalid");
          break;
        }
        double cells = std::pow(static_cast<double>(r.points_per_axis),
                                static_cast<double>(r.axes));
        if (static_cast<double>(r.data.size()) != cells)
          complain("density value count does not match points^axes");
        break;
      }
    }
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

json to_json(const Record& r) {
  json j;
  j["kind"] = kind_name(r.kind);
  j["t"] = r.t;
  switch (r.kind) {
    case Kind::flash:
      j["x"] = r.data;
      j["label"] = r.label;
      break;
    case Kind::sample:
      j["q"] = r.data;
      break;
    case Kind::density:
      j["axes"] = r.axes;
      j["points_per_axis"] = r.points_per_axis;
      j["extent"] = r.extent;
      j["values"] = r.data;
      break;
  }
  return j;
}

Record from_json(const json& j, std::size_t line) {
  auto fail = [line](const std::string& what) -> SimError {
    return ValidationError({"line " + std::to_string(line) + ": " + what});
  };
  if (!j.is_object() || !j.contains("kind") || !j.contains("t"))
    throw fail("record needs kind and t");
  Record r;
  r.t = j.at("t").get<double>();
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "flash") {
    r.kind = Kind::flash;
    r.data = j.at("x").get<std::vector<double>>();
    r.label = j.at("label").get<int>();
  } else if (kind == "sample") {
    r.kind = Kind::sample;
    r.data = j.at("q").get<std::vector<double>>();
  } else if (kind == "density") {
    r.kind = Kind::density;
    r.axes = j.at("axes").get<int>();
    r.points_per_axis = j.at("points_per_axis").get<int>();
    r.extent = j.at("extent").get<double>();
    r.data = j.at("values").get<std::vector<double>>();
  } else {
    throw fail("unknown record kind '" + kind + "'");
  }
  return r;
}

}  // namespace

void write_records(const std::vector<Record>& rows, const std::string& path) {
  validate_rows(rows);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  for (const Record& r : rows) {
    std::string line = to_json(r).dump();
    line.push_back('\n');
    if (std::fwrite(line.data(), 1, line.size(), f) != line.size()) {
      std::fclose(f);
      throw IoError("short write to '" + path + "'");
    }
  }
  if (std::fflush(f) != 0 || ::fsync(::fileno(f)) != 0) {
    std::fclose(f);
    throw IoError("cannot flush '" + path + "'");
  }
  if (std::fclose(f) != 0) throw IoError("cannot close '" + path + "'");
}

std::vector<Record> read_records(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::string text;
  char buffer[1 << 16];
  std::size_t got;
  while ((got = std::fread(buffer, 1, sizeof(buffer), f)) > 0)
    text.append(buffer, got);
  std::fclose(f);

  std::vector<Record> rows;
  std::size_t start = 0, line_no = 1;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    if (!line.empty()) {
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded())
        throw ParseError("invalid record JSON", line_no, 1);
      rows.push_back(from_json(j, line_no));
    }
    start = end + 1;
    ++line_no;
  }
  validate_rows(rows);
  return rows;
}

void export_csv(const std::vector<Record>& rows, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  std::string out = "kind,t,label,i,value\n";
  char buf[128];
  for (const Record& r : rows) {
    for (std::size_t i = 0; i < r.data.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s,%.17g,%d,%zu,%.17g\n",
                    kind_name(r.kind), r.t, r.label, i, r.data[i]);
      out += buf;
    }
  }
  if (std::fwrite(out.data(), 1, out.size(), f) != out.size()) {
    std::fclose(f);
    throw IoError("short write to '" + path + "'");
  }
  if (std::fflush(f) != 0 || ::fsync(::fileno(f)) != 0) {
    std::fclose(f);
    throw IoError("cannot flush '" + path + "'");
  }
  if (std::fclose(f) != 0) throw IoError("cannot close '" + path + "'");
}

}  // namespace ontosim::records
