// Copyright 2026 The embsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings: the oracle, the sharded forward pass, the cost model,
// the projector and the sweep drivers.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "embsim/bench/bench.h"
#include "embsim/core/errors.h"
#include "embsim/core/oracle.h"
#include "embsim/core/sharding.h"
#include "embsim/core/synth.h"
#include "embsim/embag/embag.h"
#include "embsim/fabric/cost_model.h"
#include "embsim/projector/projector.h"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using IndexArray = py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>;
using LengthArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

embsim::EmbeddingTable to_table(const FloatArray& a, embsim::TableId id) {
  if (a.ndim() != 2) throw embsim::ShapeError("embedding table must be a 2-D array");
  std::vector<float> v(a.data(), a.data() + a.size());
  return {id, static_cast<std::uint64_t>(a.shape(0)), static_cast<std::uint32_t>(a.shape(1)),
          std::move(v)};
}

py::array_t<float> to_array(const embsim::PooledMatrix& m) {
  py::array_t<float> a({static_cast<py::ssize_t>(m.batch_size), static_cast<py::ssize_t>(m.dim)});
  std::memcpy(a.mutable_data(), m.values.data(), m.values.size() * sizeof(float));
  return a;
}

embsim::TableBatch to_table_batch(const py::handle& pair, embsim::TableId id) {
  const auto t = pair.cast<py::tuple>();
  if (t.size() != 2) throw embsim::ShapeError("a table batch is an (indices, lengths) pair");
  const auto idx = t[0].cast<IndexArray>();
  const auto len = t[1].cast<LengthArray>();
  return {id, {idx.data(), idx.data() + idx.size()}, {len.data(), len.data() + len.size()}};
}

py::tuple from_table_batch(const embsim::TableBatch& tb) {
  const std::vector<py::ssize_t> ni{static_cast<py::ssize_t>(tb.indices.size())};
  const std::vector<py::ssize_t> nl{static_cast<py::ssize_t>(tb.lengths.size())};
  return py::make_tuple(py::array_t<std::uint64_t>(ni, tb.indices.data()),
                        py::array_t<std::uint32_t>(nl, tb.lengths.data()));
}

py::array_t<float> table_array(const embsim::EmbeddingTable& t) {
  py::array_t<float> a({static_cast<py::ssize_t>(t.num_rows()), static_cast<py::ssize_t>(t.dim())});
  std::memcpy(a.mutable_data(), t.values().data(), t.values().size() * sizeof(float));
  return a;
}

const embsim::fabric::CostModel& model_or_default(const embsim::fabric::CostModel* m) {
  return m ? *m : embsim::fabric::CostModel::default_model();
}

}  // namespace

PYBIND11_MODULE(_embsim, m) {
  m.doc() = "Row-wise sharded embedding bag simulator";

  auto base = py::register_exception<embsim::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<embsim::ConfigError>(m, "ConfigError", base);
  py::register_exception<embsim::OutOfRangeError>(m, "OutOfRangeError", base);
  py::register_exception<embsim::ShapeError>(m, "ShapeError", base);
  py::register_exception<embsim::ProtocolError>(m, "ProtocolError", base);
  py::register_exception<embsim::RoutingError>(m, "RoutingError", base);
  py::register_exception<embsim::UnimplementedError>(m, "UnimplementedError", base);
  py::register_exception<embsim::ValidationError>(m, "ValidationError", base);

  m.def("plan_row_wise",
        [](std::uint64_t rows, std::uint32_t ranks) {
          std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
          for (const auto& r : embsim::plan_row_wise(rows, ranks)) out.emplace_back(r.begin, r.end);
          return out;
        },
        py::arg("num_rows"), py::arg("num_ranks"), "Half-open row ranges, one per rank.");

  m.def("owner_of_row",
        [](std::uint64_t rows, std::uint32_t ranks, std::uint64_t row) {
          const std::vector<std::uint64_t> r{rows};
          const auto o = embsim::ShardingPlan::row_wise(r, ranks).owner_of_row(0, row);
          return py::make_tuple(o.rank, o.local_row);
        },
        py::arg("num_rows"), py::arg("num_ranks"), py::arg("row"));

  m.def("synth_table",
        [](std::uint64_t seed, std::uint64_t rows, std::uint32_t dim) {
          return table_array(embsim::synth_table(seed, rows, dim));
        },
        py::arg("seed"), py::arg("num_rows"), py::arg("dim"));

  m.def("synth_batch",
        [](std::uint64_t seed, std::uint32_t rank, std::uint32_t batch,
           std::vector<std::uint64_t> table_rows, std::uint32_t pooling, bool variable) {
          const auto b = embsim::synth_batch(
              seed, rank, batch, table_rows, pooling,
              variable ? embsim::PoolingMode::Variable : embsim::PoolingMode::Constant);
          py::list out;
          for (const auto& tb : b.tables) out.append(from_table_batch(tb));
          return out;
        },
        py::arg("seed"), py::arg("rank"), py::arg("batch_size"), py::arg("table_rows"),
        py::arg("pooling"), py::arg("variable") = false,
        "One rank's batch as a list of (indices, lengths) pairs, one per table.");

  m.def("oracle_embedding_bag",
        [](const FloatArray& table, const IndexArray& indices, const LengthArray& lengths) {
          const auto t = to_table(table, 0);
          return to_array(embsim::oracle_embedding_bag(
              t, {indices.data(), static_cast<std::size_t>(indices.size())},
              {lengths.data(), static_cast<std::size_t>(lengths.size())}));
        },
        py::arg("table"), py::arg("indices"), py::arg("lengths"));

  py::class_<embsim::fabric::CostModel>(m, "CostModel")
      .def_static("default", []() { return embsim::fabric::CostModel::default_model(); })
      .def_static("load", [](const std::string& path) { return embsim::fabric::CostModel::load(path); })
      .def_static("parse", [](const std::string& text) {
        return embsim::fabric::CostModel::parse(text, "<string>");
      })
      .def("eval_cost",
           [](const embsim::fabric::CostModel& cm, const std::string& backend,
              const std::string& kind, double msg_bytes, std::uint32_t ranks) {
             return cm.eval_cost(embsim::fabric::parse_backend(backend),
                                 embsim::fabric::parse_collective_kind(kind), msg_bytes, ranks);
           },
           py::arg("backend"), py::arg("kind"), py::arg("msg_bytes"), py::arg("ranks"))
      .def("gather_compute_cost", &embsim::fabric::CostModel::gather_compute_cost,
           py::arg("rows_touched"), py::arg("dim"), py::arg("element_bytes") = 4)
      .def("to_text", &embsim::fabric::CostModel::to_text);

  m.def("embedding_bag_forward",
        [](const std::vector<FloatArray>& tables, const std::vector<py::list>& batches,
           const std::string& backend, const std::string& scheduler,
           const embsim::fabric::CostModel* model) {
          std::vector<embsim::EmbeddingTable> ts;
          std::vector<std::uint64_t> rows;
          for (std::size_t t = 0; t < tables.size(); ++t) {
            ts.push_back(to_table(tables[t], static_cast<embsim::TableId>(t)));
            rows.push_back(ts.back().num_rows());
          }
          std::vector<embsim::JaggedBatch> bs;
          for (const auto& rank_batch : batches) {
            embsim::JaggedBatch jb;
            embsim::TableId id = 0;
            for (const auto& pair : rank_batch) jb.tables.push_back(to_table_batch(pair, id++));
            bs.push_back(std::move(jb));
          }
          const auto plan = embsim::ShardingPlan::row_wise(rows, static_cast<std::uint32_t>(bs.size()));
          embsim::embag::ForwardOptions opts;
          opts.backend = embsim::fabric::parse_backend(backend);
          opts.scheduler = embsim::fabric::parse_scheduler(scheduler);
          opts.cost_model = model;
          embsim::embag::ForwardResult res;
          {
            py::gil_scoped_release release;
            res = embsim::embag::embedding_bag_forward(ts, plan, bs, opts);
          }
          py::list out;
          for (const auto& r : res.ranks) {
            py::list outputs;
            for (const auto& mat : r.output) outputs.append(to_array(mat));
            py::dict d;
            d["outputs"] = outputs;
            d["permute_us"] = r.times.permute_us;
            d["gather_us"] = r.times.gather_us;
            d["reduce_scatter_us"] = r.times.reduce_scatter_us;
            d["rows_touched"] = r.rows_touched;
            out.append(d);
          }
          return out;
        },
        py::arg("tables"), py::arg("batches"), py::arg("backend") = "collective-optimized",
        py::arg("scheduler") = "round-robin", py::arg("cost_model") = nullptr,
        "Row-wise forward on len(batches) ranks. Returns one dict per rank.");

  m.def("gpus_required", &embsim::projector::gpus_required, py::arg("table_bytes"),
        py::arg("hbm_bytes_per_gpu") = embsim::projector::kDefaultHbmBytes);

  m.def("project",
        [](std::uint64_t table_bytes, std::uint32_t batch, std::uint32_t tables,
           std::uint32_t pooling, std::uint32_t dim, std::uint64_t hbm, const std::string& backend,
           const embsim::fabric::CostModel* model) {
          embsim::projector::ProjectionConfig c;
          c.table_bytes = table_bytes;
          c.hbm_bytes_per_gpu = hbm;
          c.workload = {batch, tables, pooling, dim};
          c.backend = embsim::fabric::parse_backend(backend);
          const auto r = embsim::projector::project(c, model_or_default(model));
          py::dict d;
          d["gpus_required"] = r.gpus_required;
          d["local_us"] = r.local_us;
          d["distributed_us"] = r.distributed_us;
          d["speedup"] = r.speedup;
          d["index_bytes"] = r.messages.index_bytes;
          d["output_bytes"] = r.messages.output_bytes;
          return d;
        },
        py::arg("table_bytes"), py::arg("batch"), py::arg("tables"), py::arg("pooling"),
        py::arg("dim"), py::arg("hbm_bytes_per_gpu") = embsim::projector::kDefaultHbmBytes,
        py::arg("backend") = "collective-optimized", py::arg("cost_model") = nullptr);

  m.def("run_preset",
        [](const std::string& name, std::uint64_t seed, const std::string& format,
           const std::string& scheduler) {
          auto spec = embsim::bench::preset(name);
          spec.seed = seed;
          spec.scheduler = embsim::fabric::parse_scheduler(scheduler);
          const auto& model = embsim::fabric::CostModel::default_model();
          std::vector<embsim::bench::BenchRow> rows;
          {
            py::gil_scoped_release release;
            switch (spec.mode) {
              case embsim::bench::Mode::Collectives:
                rows = embsim::bench::run_collective_sweep(spec, model);
                break;
              case embsim::bench::Mode::Embag: rows = embsim::bench::run_embag_sweep(spec, model); break;
              case embsim::bench::Mode::Projection:
                rows = embsim::bench::run_projection(spec, model);
                break;
              case embsim::bench::Mode::Validate: break;
            }
          }
          return embsim::bench::format_rows(rows, embsim::bench::parse_format(format));
        },
        py::arg("name"), py::arg("seed") = 0, py::arg("format") = "csv",
        py::arg("scheduler") = "round-robin", "Runs a named preset; returns CSV or JSON text.");

  m.def("validate",
        [](std::uint32_t configs, std::uint64_t seed, std::vector<std::uint32_t> ranks) {
          embsim::bench::SweepSpec spec;
          spec.mode = embsim::bench::Mode::Validate;
          spec.configs = configs;
          spec.seed = seed;
          spec.ranks = std::move(ranks);
          embsim::bench::ValidationReport r;
          {
            py::gil_scoped_release release;
            r = embsim::bench::run_validate(spec, embsim::fabric::CostModel::default_model());
          }
          py::dict d;
          d["passed"] = r.passed;
          d["oracle_configs"] = r.oracle_configs;
          d["collective_cases"] = r.collective_cases;
          d["max_rel_error"] = r.max_rel_error;
          d["max_rel_error_single_rank"] = r.max_rel_error_single_rank;
          d["failures"] = r.failures;
          return d;
        },
        py::arg("configs") = 200, py::arg("seed") = 0,
        py::arg("ranks") = std::vector<std::uint32_t>{1, 2, 4, 8});
}
