#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "phat/adaptation.hpp"
#include "phat/asm.hpp"
#include "phat/datagen.hpp"
#include "phat/errors.hpp"
#include "phat/metrics.hpp"
#include "phat/model_io.hpp"
#include "phat/phatnet.hpp"
#include "phat/png_io.hpp"
#include "phat/trainer.hpp"

namespace py = pybind11;
using namespace phat;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Images cross the boundary as H x W x 3 float64 arrays; 2-D arrays are
// single-channel maps.
Tensor to_tensor(const Array& a) {
  if (a.ndim() == 2) {
    Tensor t(1, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), t.raw());
    return t;
  }
  if (a.ndim() != 3) throw DimensionError("expected an H x W or H x W x C array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1)), c = static_cast<int>(a.shape(2));
  Tensor t(c, h, w);
  auto v = a.unchecked<3>();
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) t(k, y, x) = v(y, x, k);
  return t;
}

Array from_tensor(const Tensor& t) {
  if (t.channels() == 1) {
    Array out({t.height(), t.width()});
    std::copy(t.raw(), t.raw() + t.size(), out.mutable_data());
    return out;
  }
  Array out({t.height(), t.width(), t.channels()});
  auto v = out.mutable_unchecked<3>();
  for (int k = 0; k < t.channels(); ++k)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) v(y, x, k) = t(k, y, x);
  return out;
}

ImageTensor to_image(const Array& a) {
  Tensor t = to_tensor(a);
  if (t.channels() != 3) throw DimensionError("expected an H x W x 3 image");
  return ImageTensor(std::move(t));
}

TmEdit edit_from(const py::object& edit) {
  if (edit.is_none()) return TmEdit::none();
  return TmEdit::parse(edit.cast<std::string>());
}

py::dict pair_dict(const ImageTensor& hazy, const ImageTensor& clean) {
  py::dict d;
  d["hazy"] = from_tensor(hazy.tensor());
  d["clean"] = from_tensor(clean.tensor());
  return d;
}

std::vector<ImagePair> to_pairs(const std::vector<Array>& hazy, const std::vector<Array>& clean) {
  if (hazy.size() != clean.size()) throw ConfigError("hazy and clean lists differ in length");
  std::vector<ImagePair> pairs;
  for (std::size_t k = 0; k < hazy.size(); ++k) pairs.push_back({to_image(hazy[k]), to_image(clean[k])});
  return pairs;
}

}  // namespace

PYBIND11_MODULE(_phatnet, m) {
  m.doc() = "Haze transfer network and test-time adaptation";

  auto base = py::register_exception<Error>(m, "PhatError", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<CheckpointError>(m, "CheckpointError", base.ptr());

  m.attr("__version__") = kToolVersion;

  m.def("compose_asm",
        [](const Array& clean, const Array& t, const std::array<double, 3>& airlight) {
          return from_tensor(compose_asm(to_image(clean), TransmissionMap(to_tensor(t)), airlight).tensor());
        },
        py::arg("clean"), py::arg("transmission"), py::arg("airlight"));

  m.def("read_image", [](const std::filesystem::path& p) { return from_tensor(read_image(p).tensor()); });
  m.def("write_image",
        [](const std::filesystem::path& p, const Array& img, int bit_depth) {
          write_png(p, to_tensor(img), bit_depth);
        },
        py::arg("path"), py::arg("image"), py::arg("bit_depth") = 8);

  m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_tensor(a), to_tensor(b)); });
  m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_tensor(a), to_tensor(b)); });

  m.def("synth_domain",
        [](const std::string& spec_json) {
          const auto pairs = generate_domain(DomainSpec::from_json(nlohmann::json::parse(spec_json)));
          py::list out;
          for (const auto& p : pairs) {
            py::dict d = pair_dict(p.hazy, p.clean);
            d["beta"] = p.recipe.beta;
            d["airlight"] = p.recipe.airlight;
            d["transmission"] = from_tensor(transmission_from_recipe(p.recipe).tensor());
            out.append(d);
          }
          return out;
        },
        py::arg("spec_json") = "{}", "Generate a synthetic domain from a JSON spec; returns a list of dicts.");

  py::class_<PhatnetWeights>(m, "Phatnet")
      .def_static("init",
                  [](int stages, int channels, int res_blocks, std::uint64_t seed) {
                    TrainConfig cfg;
                    cfg.stages = stages;
                    cfg.channels = channels;
                    cfg.res_blocks = res_blocks;
                    return PhatnetWeights::init(cfg.network(), seed);
                  },
                  py::arg("stages") = 3, py::arg("channels") = 32, py::arg("res_blocks") = 2, py::arg("seed") = 0)
      .def_static("load", &load_phatnet, py::arg("path"))
      .def("save", [](const PhatnetWeights& w, const std::filesystem::path& p, std::uint64_t seed) {
             save_phatnet(p, w, seed);
           },
           py::arg("path"), py::arg("seed") = 0)
      .def_property_readonly("stages", [](const PhatnetWeights& w) { return w.config.stages; })
      .def_property_readonly("resolution_multiple",
                             [](const PhatnetWeights& w) { return w.config.resolution_multiple(); })
      .def("parameter_count",
           [](const PhatnetWeights& w) { return nn::parameter_count(w.params()); })
      .def("transfer",
           [](const PhatnetWeights& w, const Array& hazy, const Array& clean, const py::object& edit) {
             return from_tensor(transfer(to_image(hazy), to_image(clean), w, edit_from(edit)).tensor());
           },
           py::arg("hazy"), py::arg("clean"), py::arg("edit") = py::none(),
           "Render `clean` under the haze of `hazy`. `edit` is 'none', 'vflip' or 'gamma<g>'.")
      .def("forward",
           [](const PhatnetWeights& w, const Array& hazy, const Array& clean, const py::object& edit) {
             py::list out;
             for (const auto& t : forward(to_image(hazy), to_image(clean), w, edit_from(edit)).outputs)
               out.append(from_tensor(t));
             return out;
           },
           py::arg("hazy"), py::arg("clean"), py::arg("edit") = py::none(),
           "Unclamped per-scale outputs, finest first.");

  m.def("train_phatnet",
        [](const std::vector<Array>& hazy, const std::vector<Array>& clean, const std::string& config_json) {
          const auto pairs = to_pairs(hazy, clean);
          const TrainConfig cfg = TrainConfig::from_json(nlohmann::json::parse(config_json));
          TrainState state;
          {
            py::gil_scoped_release release;
            state = train(pairs, cfg);
          }
          py::list history;
          for (const auto& r : state.history) {
            py::dict d;
            d["step"] = r.step;
            d["lr"] = r.lr;
            d["htc"] = r.htc;
            d["cl"] = r.cl;
            d["total"] = r.total;
            history.append(d);
          }
          return py::make_tuple(state.weights, history);
        },
        py::arg("hazy"), py::arg("clean"), py::arg("config_json") = "{}",
        "Train on paired lists; returns (Phatnet, loss history).");

  py::class_<DehazerWeights>(m, "Dehazer")
      .def_static("init",
                  [](int depth, int base_channels, int res_blocks, std::uint64_t seed) {
                    return DehazerWeights::init({depth, base_channels, res_blocks}, seed);
                  },
                  py::arg("depth") = 2, py::arg("base_channels") = 16, py::arg("res_blocks") = 1,
                  py::arg("seed") = 0)
      .def_static("load", &load_dehazer, py::arg("path"))
      .def("save", [](const DehazerWeights& w, const std::filesystem::path& p, std::uint64_t seed) {
             save_dehazer(p, w, seed);
           },
           py::arg("path"), py::arg("seed") = 0)
      .def("dehaze", [](const DehazerWeights& w, const Array& hazy) {
        return from_tensor(dehaze(to_image(hazy), w).tensor());
      });

  py::class_<FinetuneSet>(m, "FinetuneSet")
      .def_static("load", &FinetuneSet::load, py::arg("path"))
      .def("__len__", &FinetuneSet::size)
      .def("save", &FinetuneSet::save, py::arg("path"))
      .def("content_hash", &FinetuneSet::content_hash)
      .def("entry",
           [](const FinetuneSet& s, std::size_t k) {
             if (k >= s.size()) throw py::index_error();
             const auto& e = s.entries[k];
             py::dict d = pair_dict(s.transferred(k), s.clean_ref(k));
             d["target_idx"] = e.target_idx;
             d["source_idx"] = e.source_idx;
             d["edit"] = e.edit.tag();
             return d;
           })
      .def_property_readonly("failure_count", [](const FinetuneSet& s) { return s.failures.size(); });

  m.def("build_finetune_set",
        [](const std::vector<Array>& target_hazy, const std::vector<Array>& source_clean, const PhatnetWeights& w,
           const std::vector<std::string>& edits, int workers) {
          std::vector<ImageTensor> hazy, clean;
          for (const auto& a : target_hazy) hazy.push_back(to_image(a));
          for (const auto& a : source_clean) clean.push_back(to_image(a));
          std::vector<TmEdit> parsed;
          for (const auto& e : edits) {
            if (e == "default") {
              const auto d = default_edits();
              parsed.insert(parsed.end(), d.begin(), d.end());
            } else {
              parsed.push_back(TmEdit::parse(e));
            }
          }
          py::gil_scoped_release release;
          return build_finetune_set(hazy, clean, w, parsed, workers);
        },
        py::arg("target_hazy"), py::arg("source_clean"), py::arg("phatnet"),
        py::arg("edits") = std::vector<std::string>{"none"}, py::arg("workers") = 1,
        "Pairs every target hazy image with every source clean image under each edit; \"default\" expands to "
        "none, gamma0.7, gamma1.5 and vflip.");

  m.def("adapt",
        [](const DehazerWeights& w, const FinetuneSet& set, int epochs, int batch_size, double lr,
           std::uint64_t seed) {
          AdaptConfig cfg;
          cfg.epochs = epochs;
          cfg.batch_size = batch_size;
          cfg.lr = lr;
          cfg.seed = seed;
          py::gil_scoped_release release;
          return adapt_dehazer(w, set, cfg).weights;
        },
        py::arg("dehazer"), py::arg("finetune_set"), py::arg("epochs") = 1, py::arg("batch_size") = 1,
        py::arg("lr") = 1e-4, py::arg("seed") = 0, "Fine-tune a copy of `dehazer`; the input is left untouched.");
}
