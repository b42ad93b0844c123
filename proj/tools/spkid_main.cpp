// Copyright (c) 2025 the spkid authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// spkid command line front end.
//
//   spkid synth     --speakers N --out DIR [--seed S]
//   spkid extract   --in WAV --out CSV [--method M]
//   spkid disguise  --in WAV --out WAV --effect {none,high,low,evc}
//                   [--semitones S] [--carrier HZ]
//   spkid train     --manifest CSV --out MODEL [--method M] [--seed S] ...
//   spkid identify  --model MODEL --in WAV [--method M]
//   spkid evaluate  --manifest CSV [--config JSON] [--methods ...] ...
//   spkid report    --in REPORT.json --format {md,csv,json} [--out PATH]
//
// evaluate accepts a JSON config file; explicitly passed flags override the
// file. Every report embeds the resolved config, so a report is sufficient
// to rerun its experiment.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spkid/audio_io.hpp"
#include "spkid/classifier.hpp"
#include "spkid/disguise.hpp"
#include "spkid/eval.hpp"
#include "spkid/features.hpp"
#include "spkid/plda.hpp"
#include "spkid/synth.hpp"
#include "spkid/types.hpp"

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw spkid::IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw spkid::IoError("short write to " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw spkid::IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Emits the result to --out when given, stdout otherwise.
void deliver(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
  }
}

// The train partition: sentences 1-4, neutral speech by protocol.
std::vector<spkid::UtteranceRecord> train_partition(
    const std::vector<spkid::UtteranceRecord>& records) {
  std::vector<spkid::UtteranceRecord> train;
  for (const auto& r : records) {
    if (r.sentence_id <= 4) train.push_back(r);
  }
  if (train.empty()) {
    throw spkid::ParamError("manifest has no training records (sentences 1-4)");
  }
  return train;
}

struct TrainOptions {
  std::string manifest;
  std::string method = "mfcc_dd";
  std::string out;
  std::uint64_t seed = 42;
  double svm_c = 10.0;
  double svm_gamma = 0.0;
  int plda_iters = 20;
};

void run_train(const TrainOptions& opt) {
  spkid::ExperimentConfig cfg;
  const auto& known = spkid::all_method_names();
  if (std::find(known.begin(), known.end(), opt.method) == known.end()) {
    throw spkid::ParamError("unknown method " + opt.method);
  }
  auto train = train_partition(spkid::load_manifest(opt.manifest));

  std::vector<spkid::UtteranceEmbedding> embeddings;
  std::vector<std::string> labels;
  embeddings.reserve(train.size());
  for (const auto& r : train) {
    const auto path = spkid::resolve_manifest_path(opt.manifest, r.path);
    auto clip = spkid::read_wav(path);
    embeddings.push_back(
        spkid::pool_utterance(spkid::extract_features(clip, opt.method, cfg)));
    labels.push_back(r.speaker_id);
  }

  if (opt.method == "plda") {
    spkid::PldaOptions popt;
    popt.n_iters = opt.plda_iters;
    std::vector<Eigen::VectorXd> vecs;
    vecs.reserve(embeddings.size());
    for (const auto& e : embeddings) {
      vecs.push_back(Eigen::Map<const Eigen::VectorXd>(
          e.values.data(), static_cast<Eigen::Index>(e.values.size())));
    }
    auto model = spkid::train_plda(vecs, labels, popt);
    spkid::save_plda(model, opt.out);
    std::cout << "trained plda on " << train.size() << " utterances, "
              << model.enrolled.size() << " speakers -> " << opt.out << "\n";
  } else {
    spkid::SvmConfig svm;
    svm.c = opt.svm_c;
    svm.gamma = opt.svm_gamma;
    svm.seed = opt.seed;
    auto model = spkid::train_svm(embeddings, labels, svm);
    spkid::save_svm(model, opt.out);
    std::cout << "trained svm (" << opt.method << ") on " << train.size()
              << " utterances, " << model.classes.size() << " speakers -> "
              << opt.out << "\n";
  }
}

void run_identify(const std::string& model_path, const std::string& wav_path,
                  const std::string& method) {
  spkid::ExperimentConfig cfg;
  auto clip = spkid::read_wav(wav_path);
  auto embedding =
      spkid::pool_utterance(spkid::extract_features(clip, method, cfg));

  std::ifstream probe(model_path);
  if (!probe) throw spkid::IoError("cannot open model " + model_path);
  std::string magic;
  std::getline(probe, magic);
  probe.close();

  std::string speaker;
  if (magic.rfind("spkid-plda", 0) == 0) {
    auto model = spkid::load_plda(model_path);
    speaker = spkid::plda_identify(
                  model, Eigen::Map<const Eigen::VectorXd>(
                             embedding.values.data(),
                             static_cast<Eigen::Index>(embedding.values.size())))
                  .speaker_id;
  } else if (magic.rfind("spkid-svm", 0) == 0) {
    auto model = spkid::load_svm(model_path);
    speaker = spkid::svm_predict(model, embedding).speaker_id;
  } else {
    throw spkid::FormatError("unrecognized model file " + model_path);
  }
  std::cout << speaker << "\n";
}

// JSON config for evaluate. Unknown keys are an error so typos do not pass
// silently as defaults.
void apply_config_file(const std::string& path, spkid::ExperimentConfig& cfg) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw spkid::ParseError("config " + path + ": " + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "manifest") {
      cfg.manifest_path = value.get<std::string>();
    } else if (key == "methods") {
      cfg.methods = value.get<std::vector<std::string>>();
    } else if (key == "effects") {
      cfg.effects.clear();
      for (const auto& name : value.get<std::vector<std::string>>()) {
        cfg.effects.push_back(spkid::disguise_effect_from_string(name));
      }
    } else if (key == "semitones_high") {
      cfg.semitones_high = value.get<double>();
    } else if (key == "semitones_low") {
      cfg.semitones_low = value.get<double>();
    } else if (key == "carrier_hz") {
      cfg.carrier_hz = value.get<double>();
    } else if (key == "mfcc_n") {
      cfg.mfcc.n_mfcc = value.get<std::size_t>();
    } else if (key == "mfcc_fmin") {
      cfg.mfcc.fmin = value.get<double>();
    } else if (key == "mfcc_fmax") {
      cfg.mfcc.fmax = value.get<double>();
    } else if (key == "lpc_frame_ms") {
      cfg.lpc.frame_ms = value.get<double>();
    } else if (key == "lpc_order") {
      cfg.lpc.order = value.get<std::size_t>();
    } else if (key == "dwpd_depth") {
      cfg.dwpd.depth = value.get<int>();
    } else if (key == "dct_frame_ms") {
      cfg.dct.frame_ms = value.get<double>();
    } else if (key == "dct_hop_ms") {
      cfg.dct.hop_ms = value.get<double>();
    } else if (key == "dct_coeffs") {
      cfg.dct.n_coeffs = value.get<std::size_t>();
    } else if (key == "svm_c") {
      cfg.svm.c = value.get<double>();
    } else if (key == "svm_gamma") {
      cfg.svm.gamma = value.get<double>();
    } else if (key == "plda_iters") {
      cfg.plda.n_iters = value.get<int>();
    } else if (key == "plda_floor") {
      cfg.plda.eig_floor = value.get<double>();
    } else if (key == "seed") {
      cfg.seed = value.get<std::uint64_t>();
    } else {
      throw spkid::ParamError("config " + path + ": unknown key '" + key + "'");
    }
  }
}

spkid::EvalReport parse_report_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw spkid::ParseError(std::string("report json: ") + e.what());
  }
  spkid::EvalReport report;
  report.toolkit_version = j.at("toolkit_version").get<std::string>();
  report.config_echo = j.at("config").get<std::string>();
  for (const auto& cell : j.at("cells")) {
    spkid::CellResult c;
    c.method = cell.at("method").get<std::string>();
    c.effect =
        spkid::disguise_effect_from_string(cell.at("effect").get<std::string>());
    c.n_correct = cell.at("n_correct").get<std::size_t>();
    c.n_total = cell.at("n_total").get<std::size_t>();
    if (c.n_total == 0) throw spkid::ParseError("report json: n_total = 0");
    c.accuracy = static_cast<double>(c.n_correct) / static_cast<double>(c.n_total);
    report.cells.push_back(std::move(c));
  }
  return report;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speaker identification toolkit"};
  app.set_version_flag("--version", spkid::kVersion);
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::size_t synth_speakers = 10;
  std::string synth_out;
  std::uint64_t synth_seed = 42;
  synth->add_option("--speakers", synth_speakers, "number of speakers (2-100)")
      ->required();
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "corpus seed");

  // extract
  auto* extract = app.add_subcommand("extract", "frame features from a WAV");
  std::string extract_in, extract_out, extract_method = "mfcc_dd";
  extract->add_option("--in", extract_in, "input WAV")->required();
  extract->add_option("--out", extract_out, "output CSV")->required();
  extract->add_option("--method", extract_method, "mfcc_dd|lpc|dwpd|dct");

  // disguise
  auto* disguise = app.add_subcommand("disguise", "apply a voice changer");
  std::string dis_in, dis_out, dis_effect = "none";
  double dis_semitones = 0.0, dis_carrier = 0.0;
  disguise->add_option("--in", dis_in, "input WAV")->required();
  disguise->add_option("--out", dis_out, "output WAV")->required();
  disguise->add_option("--effect", dis_effect, "none|high|low|evc");
  auto* dis_semi_opt =
      disguise->add_option("--semitones", dis_semitones, "pitch shift override");
  auto* dis_carrier_opt =
      disguise->add_option("--carrier", dis_carrier, "evc carrier Hz override");

  // train
  auto* train = app.add_subcommand("train", "train a backend on a manifest");
  TrainOptions topt;
  train->add_option("--manifest", topt.manifest, "corpus manifest CSV")
      ->required();
  train->add_option("--out", topt.out, "model output path")->required();
  train->add_option("--method", topt.method, "mfcc_dd|lpc|dwpd|dct|plda");
  train->add_option("--seed", topt.seed, "training seed");
  train->add_option("--svm-c", topt.svm_c, "SVM regularization C");
  train->add_option("--svm-gamma", topt.svm_gamma, "RBF gamma (0 = auto)");
  train->add_option("--plda-iters", topt.plda_iters, "PLDA EM iterations");

  // identify
  auto* identify = app.add_subcommand("identify", "name the speaker of a WAV");
  std::string id_model, id_in, id_method = "mfcc_dd";
  identify->add_option("--model", id_model, "model file from train")->required();
  identify->add_option("--in", id_in, "input WAV")->required();
  identify->add_option("--method", id_method, "feature method used at train time");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "run the experiment grid");
  std::string eval_manifest, eval_config, eval_format = "markdown", eval_out;
  std::vector<std::string> eval_methods, eval_effects;
  double eval_semi_high = 4.0, eval_semi_low = -4.0, eval_carrier = 50.0;
  double eval_svm_c = 10.0, eval_svm_gamma = 0.0;
  int eval_plda_iters = 20;
  std::uint64_t eval_seed = 42;
  auto* em_opt = evaluate->add_option("--manifest", eval_manifest,
                                      "corpus manifest CSV");
  evaluate->add_option("--config", eval_config, "JSON config file");
  auto* emeth_opt = evaluate->add_option("--methods", eval_methods,
                                         "comma separated method list")
                        ->delimiter(',');
  auto* eeff_opt = evaluate->add_option("--effects", eval_effects,
                                        "comma separated effect list")
                       ->delimiter(',');
  auto* esh_opt = evaluate->add_option("--semitones-high", eval_semi_high,
                                       "high-pitched shift");
  auto* esl_opt = evaluate->add_option("--semitones-low", eval_semi_low,
                                       "low-pitched shift");
  auto* ec_opt = evaluate->add_option("--carrier", eval_carrier, "evc carrier Hz");
  auto* esvmc_opt = evaluate->add_option("--svm-c", eval_svm_c, "SVM C");
  auto* esvmg_opt =
      evaluate->add_option("--svm-gamma", eval_svm_gamma, "RBF gamma (0 = auto)");
  auto* epi_opt =
      evaluate->add_option("--plda-iters", eval_plda_iters, "PLDA EM iterations");
  auto* eseed_opt = evaluate->add_option("--seed", eval_seed, "experiment seed");
  evaluate->add_option("--format", eval_format, "markdown|csv|json");
  evaluate->add_option("--out", eval_out, "report path (stdout when omitted)");

  // report
  auto* report_cmd =
      app.add_subcommand("report", "re-emit a JSON report in another format");
  std::string rep_in, rep_format = "markdown", rep_out;
  report_cmd->add_option("--in", rep_in, "report JSON from evaluate")->required();
  report_cmd->add_option("--format", rep_format, "markdown|csv|json");
  report_cmd->add_option("--out", rep_out, "output path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    if (synth->parsed()) {
      auto manifest = spkid::build_corpus(synth_speakers, synth_out, synth_seed);
      std::cout << manifest << "\n";
    } else if (extract->parsed()) {
      spkid::feature_method_from_string(extract_method);  // rejects "plda"
      spkid::ExperimentConfig cfg;
      auto clip = spkid::read_wav(extract_in);
      auto features = spkid::extract_features(clip, extract_method, cfg);
      spkid::save_features_csv(features, extract_out);
      std::cout << features.n_frames << " frames x " << features.dim
                << " dims -> " << extract_out << "\n";
    } else if (disguise->parsed()) {
      auto spec = spkid::default_disguise_spec(
          spkid::disguise_effect_from_string(dis_effect));
      if (dis_semi_opt->count() > 0) spec.semitones = dis_semitones;
      if (dis_carrier_opt->count() > 0) spec.carrier_hz = dis_carrier;
      auto clip = spkid::read_wav(dis_in);
      spkid::write_wav(spkid::apply_disguise(clip, spec), dis_out);
      std::cout << dis_out << "\n";
    } else if (train->parsed()) {
      run_train(topt);
    } else if (identify->parsed()) {
      run_identify(id_model, id_in, id_method);
    } else if (evaluate->parsed()) {
      spkid::ExperimentConfig cfg;
      if (!eval_config.empty()) apply_config_file(eval_config, cfg);
      // Explicit flags override the config file.
      if (em_opt->count() > 0 || cfg.manifest_path.empty()) {
        cfg.manifest_path = eval_manifest;
      }
      if (emeth_opt->count() > 0) cfg.methods = eval_methods;
      if (eeff_opt->count() > 0) {
        cfg.effects.clear();
        for (const auto& name : eval_effects) {
          cfg.effects.push_back(spkid::disguise_effect_from_string(name));
        }
      }
      if (esh_opt->count() > 0) cfg.semitones_high = eval_semi_high;
      if (esl_opt->count() > 0) cfg.semitones_low = eval_semi_low;
      if (ec_opt->count() > 0) cfg.carrier_hz = eval_carrier;
      if (esvmc_opt->count() > 0) cfg.svm.c = eval_svm_c;
      if (esvmg_opt->count() > 0) cfg.svm.gamma = eval_svm_gamma;
      if (epi_opt->count() > 0) cfg.plda.n_iters = eval_plda_iters;
      if (eseed_opt->count() > 0) cfg.seed = eval_seed;
      if (cfg.manifest_path.empty()) {
        throw spkid::ParamError("evaluate needs --manifest or a config manifest");
      }
      auto report = spkid::run_experiment(cfg);
      deliver(eval_out, spkid::emit_report(
                            report, spkid::report_format_from_string(eval_format)));
    } else if (report_cmd->parsed()) {
      auto report = parse_report_json(read_text_file(rep_in));
      deliver(rep_out, spkid::emit_report(
                           report, spkid::report_format_from_string(rep_format)));
    }
  } catch (const std::exception& e) {
    std::cerr << "spkid " << sub << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
