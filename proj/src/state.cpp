#include "cilab/state.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "cilab/error.hpp"

namespace cilab {

void AnchorCache::insert(int class_id, Vector z) {
  if (entries_.count(class_id))
    throw StateError("anchor for class " + std::to_string(class_id) + " already cached");
  entries_.emplace(class_id, std::move(z));
}

const Vector& AnchorCache::at(int class_id) const {
  auto it = entries_.find(class_id);
  if (it == entries_.end())
    throw StateError("anchor for class " + std::to_string(class_id) + " missing");
  return it->second;
}

void PrototypeBank::insert(int class_id, Vector prototype, int task_id) {
  if (prototypes_.count(class_id))
    throw StateError("prototype for class " + std::to_string(class_id) + " already present");
  prototypes_.emplace(class_id, std::move(prototype));
  task_map_.emplace(class_id, task_id);
}

const Vector& PrototypeBank::at(int class_id) const {
  auto it = prototypes_.find(class_id);
  if (it == prototypes_.end())
    throw StateError("prototype for class " + std::to_string(class_id) + " missing");
  return it->second;
}

int PrototypeBank::task_of(int class_id) const {
  auto it = task_map_.find(class_id);
  if (it == task_map_.end())
    throw StateError("task map entry for class " + std::to_string(class_id) + " missing");
  return it->second;
}

const TaskArtifacts* ModelState::find_task(int task_id) const {
  for (const auto& t : tasks)
    if (t.task_id == task_id) return &t;
  return nullptr;
}

TaskArtifacts* ModelState::find_task(int task_id) {
  for (auto& t : tasks)
    if (t.task_id == task_id) return &t;
  return nullptr;
}

std::vector<int> ModelState::seen_classes() const {
  std::vector<int> out;
  for (const auto& t : tasks) out.insert(out.end(), t.class_ids.begin(), t.class_ids.end());
  std::sort(out.begin(), out.end());
  return out;
}

Vector ModelState::text_feature(int class_id) const {
  auto it = prompts.find(class_id);
  if (it == prompts.end())
    throw StateError("prompt for class " + std::to_string(class_id) + " missing");
  return encode_text({class_id, it->second}, encoder, text_adapter);
}

namespace {

using json = nlohmann::ordered_json;

json matrix_to_json(const Matrix& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = m.storage();
  return j;
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto& data = j.at("data");
  if (data.size() != m.storage().size()) throw StateError("checkpoint: matrix size mismatch");
  for (std::size_t i = 0; i < m.storage().size(); ++i)
    m.storage()[i] = data[i].get<double>();
  return m;
}

json vector_to_json(const Vector& v) { return json(v); }

Vector vector_from_json(const json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json adapter_to_json(const LowRankAdapter& ad) {
  json j;
  j["a"] = matrix_to_json(ad.a);
  j["b"] = matrix_to_json(ad.b);
  j["scale"] = ad.scale;
  return j;
}

LowRankAdapter adapter_from_json(const json& j) {
  LowRankAdapter ad;
  ad.a = matrix_from_json(j.at("a"));
  ad.b = matrix_from_json(j.at("b"));
  ad.scale = j.at("scale").get<double>();
  return ad;
}

json class_vector_map_to_json(const std::map<int, Vector>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = vector_to_json(v);
  return j;
}

std::map<int, Vector> class_vector_map_from_json(const json& j) {
  std::map<int, Vector> out;
  for (auto it = j.begin(); it != j.end(); ++it)
    out.emplace(std::stoi(it.key()), vector_from_json(it.value()));
  return out;
}

}  // namespace

std::string checkpoint_json(const ModelState& state) {
  json j;
  j["format"] = "cilab-checkpoint-v1";
  j["encoder"]["w_img0"] = matrix_to_json(state.encoder.w_img0);
  j["encoder"]["w_txt0"] = matrix_to_json(state.encoder.w_txt0);
  j["text_adapter"] = adapter_to_json(state.text_adapter);

  json tasks = json::array();
  for (const auto& t : state.tasks) {
    json tj;
    tj["task_id"] = t.task_id;
    tj["class_ids"] = t.class_ids;
    tj["visual_adapter"] = adapter_to_json(t.visual_adapter);
    if (t.subspace) {
      tj["subspace"]["u"] = matrix_to_json(t.subspace->u);
      tj["subspace"]["rank"] = t.subspace->rank;
    }
    if (t.head) {
      tj["head"]["w_comp"] = matrix_to_json(t.head->w_comp);
      tj["head"]["class_order"] = t.head->class_order;
      tj["head"]["orth_constrained"] = t.head->orth_constrained;
    }
    tasks.push_back(std::move(tj));
  }
  j["tasks"] = std::move(tasks);
  j["anchors"] = class_vector_map_to_json(state.anchors.entries());
  j["prototypes"] = class_vector_map_to_json(state.prototypes.prototypes());
  json task_map = json::object();
  for (const auto& [c, t] : state.prototypes.task_map()) task_map[std::to_string(c)] = t;
  j["prototype_tasks"] = std::move(task_map);
  j["prompts"] = class_vector_map_to_json(state.prompts);
  json thr = json::object();
  for (const auto& [t, w] : state.thresholds) thr[std::to_string(t)] = w;
  j["thresholds"] = std::move(thr);
  return j.dump(2) + "\n";
}

ModelState checkpoint_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("format").get<std::string>() != "cilab-checkpoint-v1")
    throw StateError("checkpoint: unknown format tag");
  ModelState state;
  state.encoder.w_img0 = matrix_from_json(j.at("encoder").at("w_img0"));
  state.encoder.w_txt0 = matrix_from_json(j.at("encoder").at("w_txt0"));
  state.text_adapter = adapter_from_json(j.at("text_adapter"));
  for (const auto& tj : j.at("tasks")) {
    TaskArtifacts t;
    t.task_id = tj.at("task_id").get<int>();
    t.class_ids = tj.at("class_ids").get<std::vector<int>>();
    t.visual_adapter = adapter_from_json(tj.at("visual_adapter"));
    if (tj.contains("subspace")) {
      TextSubspace sub;
      sub.task_id = t.task_id;
      sub.u = matrix_from_json(tj.at("subspace").at("u"));
      sub.rank = tj.at("subspace").at("rank").get<std::size_t>();
      const std::size_t d = sub.u.rows();
      // Projectors are cheap to rebuild and must stay consistent with u.
      if (sub.rank > 0) {
        Matrix bb(d, d);
        for (std::size_t k = 0; k < sub.u.cols(); ++k)
          add_outer(bb, 1.0, sub.u.col(k), sub.u.col(k));
        sub.p = std::move(bb);
      } else {
        sub.p = Matrix(d, d);
      }
      sub.p_perp = Matrix::identity(d) - sub.p;
      t.subspace = std::move(sub);
    }
    if (tj.contains("head")) {
      CompHead head;
      head.task_id = t.task_id;
      head.w_comp = matrix_from_json(tj.at("head").at("w_comp"));
      head.class_order = tj.at("head").at("class_order").get<std::vector<int>>();
      head.orth_constrained = tj.at("head").at("orth_constrained").get<bool>();
      t.head = std::move(head);
    }
    state.tasks.push_back(std::move(t));
  }
  for (const auto& [c, v] : class_vector_map_from_json(j.at("anchors")))
    state.anchors.insert(c, v);
  auto protos = class_vector_map_from_json(j.at("prototypes"));
  for (const auto& [c, v] : protos)
    state.prototypes.insert(c, v, j.at("prototype_tasks").at(std::to_string(c)).get<int>());
  state.prompts = class_vector_map_from_json(j.at("prompts"));
  for (auto it = j.at("thresholds").begin(); it != j.at("thresholds").end(); ++it)
    state.thresholds[std::stoi(it.key())] = it.value().get<double>();
  return state;
}

void save_checkpoint(const ModelState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open checkpoint path for writing: " + path);
  out << checkpoint_json(state);
}

ModelState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint path for reading: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_json(text);
}

}  // namespace cilab
