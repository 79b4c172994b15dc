#pragma once

#include <string>
#include <vector>

namespace ontosim::records {

/// One output line.  Three kinds share the file format:
///   flash:   {"kind":"flash","t":..,"x":[..],"label":..}
///   sample:  {"kind":"sample","t":..,"q":[..]}
///   density: {"kind":"density","t":..,"axes":..,"points_per_axis":..,
///             "extent":..,"values":[..]}
enum class Kind { flash, sample, density };

struct Record {
  Kind kind = Kind::sample;
  double t = 0.0;
  std::vector<double> data;  // x[], q[], or density values
  int label = -1;            // flashes only
  // density metadata
  int axes = 0;
  int points_per_axis = 0;
  double extent = 0.0;
};

Record flash_record(double t, std::vector<double> x, int label);
Record sample_record(double t, std::vector<double> q);
Record density_record(double t, int axes, int points_per_axis, double extent,
                      std::vector<double> values);

/// Validates every record (finite values, flash labels >= 0, density value
/// count == points^axes); throws ValidationError listing all offending rows
/// before anything touches the file.  Writes one JSON object per line,
/// flushes and fsyncs before returning.  Throws IoError on failure.
void write_records(const std::vector<Record>& rows, const std::string& path);

/// Round-trip reader.  Throws ParseError / ValidationError / IoError.
std::vector<Record> read_records(const std::string& path);

/// Flattens records to CSV: kind,t,label,i,value — one row per vector
/// element, plot-ready.
void export_csv(const std::vector<Record>& rows, const std::string& path);

}  // namespace ontosim::records
