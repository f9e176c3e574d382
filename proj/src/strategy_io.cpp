// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/strategy_io.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace stepwidth {

using nlohmann::json;

StrategyFile StrategyFile::from_strategy(const Strategy& s, std::vector<WidthRatio> options, const Sampler& sampler,
                                         const TimestepSpacing& spacing) {
  std::sort(options.begin(), options.end());
  options.erase(std::unique(options.begin(), options.end()), options.end());
  StrategyFile f;
  f.num_steps = s.size();
  f.width_options = options;
  for (WidthRatio w : s.widths) {
    const auto it = std::find(options.begin(), options.end(), w);
    if (it == options.end()) throw StrategyFormatError("width " + w.to_string() + " is not among the options");
    f.widths.push_back(static_cast<std::size_t>(it - options.begin()));
  }
  f.sampler = sampler;
  f.spacing = spacing.steps();
  f.total_steps = spacing.total_steps();
  return f;
}

Strategy StrategyFile::strategy() const {
  validate();
  Strategy s;
  for (std::size_t idx : widths) s.widths.push_back(width_options[idx]);
  return s;
}

void StrategyFile::validate() const {
  if (num_steps < 1) throw StrategyFormatError("num_steps must be >= 1");
  if (width_options.empty()) throw StrategyFormatError("width_options must not be empty");
  if (widths.size() != num_steps)
    throw StrategyFormatError("widths has " + std::to_string(widths.size()) + " entries but num_steps is " +
                              std::to_string(num_steps));
  for (std::size_t i = 0; i < widths.size(); ++i)
    if (widths[i] >= width_options.size())
      throw StrategyFormatError("widths[" + std::to_string(i) + "] = " + std::to_string(widths[i]) +
                                " is out of range for " + std::to_string(width_options.size()) + " width options");
  try {
    TimestepSpacing(spacing, total_steps);
  } catch (const std::invalid_argument& e) {
    throw StrategyFormatError(std::string("invalid spacing: ") + e.what());
  }
}

std::string strategy_to_json(const StrategyFile& f) {
  f.validate();
  json options = json::array();
  for (WidthRatio w : f.width_options) options.push_back(w.to_string());
  json doc = {{"num_steps", f.num_steps},
              {"width_options", options},
              {"widths", f.widths},
              {"sampler", {{"kind", f.sampler.name()}, {"eta", f.sampler.eta}}},
              {"spacing", {{"total_steps", f.total_steps}, {"steps", f.spacing}}}};
  if (f.provenance) {
    const auto& p = *f.provenance;
    doc["provenance"] = {{"search_seed", p.search_seed}, {"generations", p.generations}, {"population", p.population},
                         {"mutation", p.mutation},       {"w_m", p.flops_weight},        {"quality", p.quality},
                         {"avg_flops", p.avg_flops}};
  }
  return doc.dump(2) + "\n";
}

StrategyFile strategy_from_json(const std::string& text) {
  StrategyFile f;
  try {
    const json doc = json::parse(text);
    f.num_steps = doc.at("num_steps").get<std::size_t>();
    for (const auto& w : doc.at("width_options")) f.width_options.push_back(WidthRatio::parse(w.get<std::string>()));
    f.widths = doc.at("widths").get<std::vector<std::size_t>>();
    const json& s = doc.at("sampler");
    f.sampler = Sampler::parse(s.at("kind").get<std::string>(), s.value("eta", 0.0));
    f.total_steps = doc.at("spacing").at("total_steps").get<int>();
    f.spacing = doc.at("spacing").at("steps").get<std::vector<int>>();
    if (doc.contains("provenance")) {
      const json& p = doc.at("provenance");
      f.provenance = StrategyProvenance{p.at("search_seed").get<std::uint64_t>(), p.at("generations").get<int>(),
                                        p.at("population").get<std::size_t>(),   p.at("mutation").get<double>(),
                                        p.at("w_m").get<double>(),               p.at("quality").get<double>(),
                                        p.at("avg_flops").get<double>()};
    }
  } catch (const json::exception& e) {
    throw StrategyFormatError(std::string("malformed strategy file: ") + e.what());
  } catch (const StrategyFormatError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw StrategyFormatError(std::string("malformed strategy file: ") + e.what());
  }
  f.validate();
  return f;
}

void save_strategy(const std::filesystem::path& path, const StrategyFile& file) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << strategy_to_json(file);
}

StrategyFile load_strategy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open strategy file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return strategy_from_json(buf.str());
}

void write_archive_csv(const std::filesystem::path& path, const std::vector<Individual>& archive,
                       double quality_unit, double flops_unit) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  out << "strategy,quality_rel,quality,avg_flops_rel,avg_flops,scalar_score,rank\n";
  for (const auto& ind : archive)
    out << '"' << ind.strategy.to_string() << "\"," << ind.quality << ',' << ind.quality * quality_unit << ','
        << ind.avg_flops << ','
        << ind.avg_flops * flops_unit << ',' << ind.scalar_score << ',' << ind.rank << '\n';
}

}  // namespace stepwidth
