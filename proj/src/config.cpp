#include "rgd/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "rgd/errors.hpp"

namespace rgd {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Splits on commas outside parentheses.
std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || (s[i] == ',' && depth == 0)) {
      const std::string_view item = trim(s.substr(start, i - start));
      if (!item.empty()) {
        out.emplace_back(item);
      }
      start = i + 1;
    } else if (s[i] == '(') {
      ++depth;
    } else if (s[i] == ')') {
      --depth;
    }
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return v;
}

std::optional<long long> to_integer(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return v;
}

struct Entry {
  int line;
  std::string field;
  std::string value;
};

class Reader {
 public:
  explicit Reader(const Entry& e) : e_(e) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(e_.line, e_.field, msg); }

  double number() const {
    const auto v = to_double(e_.value);
    if (!v) {
      fail("expected a number, got '" + e_.value + "'");
    }
    return *v;
  }

  long long integer(long long lo = std::numeric_limits<long long>::min()) const {
    const auto v = to_integer(e_.value);
    if (!v) {
      fail("expected an integer, got '" + e_.value + "'");
    }
    if (*v < lo) {
      fail("must be at least " + std::to_string(lo));
    }
    return *v;
  }

  std::vector<std::string> list() const {
    auto items = split_list(e_.value);
    if (items.empty()) {
      fail("expected a non-empty list");
    }
    return items;
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const std::string& item : list()) {
      const auto v = to_double(item);
      if (!v) {
        fail("expected numbers, got '" + item + "'");
      }
      out.push_back(*v);
    }
    return out;
  }

  std::vector<long long> integers(long long lo) const {
    std::vector<long long> out;
    for (const std::string& item : list()) {
      const auto v = to_integer(item);
      if (!v) {
        fail("expected integers, got '" + item + "'");
      }
      if (*v < lo) {
        fail("entries must be at least " + std::to_string(lo));
      }
      out.push_back(*v);
    }
    return out;
  }

  const std::string& text() const { return e_.value; }

 private:
  const Entry& e_;
};

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += (i ? ", " : "") + v[i];
  }
  return out;
}

template <typename T>
std::string join_numbers(const std::vector<T>& v) {
  std::vector<std::string> s;
  for (const T& x : v) {
    if constexpr (std::is_floating_point_v<T>) {
      s.push_back(bench::format_number(x));
    } else {
      s.push_back(std::to_string(x));
    }
  }
  return join(s);
}

std::string noise_text(const NoiseSpec& n) {
  if (n.level()) {
    return std::string(short_name(n.family())) + "@" + std::to_string(*n.level());
  }
  return std::string(short_name(n.family())) + "(" + bench::format_number(n.param_a()) + ", " +
         bench::format_number(n.param_b()) + ")";
}

}  // namespace

ConfigError::ConfigError(int line, std::string field, const std::string& message)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                         (field.empty() ? std::string() : "'" + field + "': ") + message),
      line_(line),
      field_(std::move(field)) {}

NoiseSpec parse_noise_spec(std::string_view text) {
  text = trim(text);
  if (const auto at = text.find('@'); at != std::string_view::npos) {
    const auto family = parse_noise_family(trim(text.substr(0, at)));
    if (!family) {
      throw InvalidConfig("unknown noise family '" + std::string(trim(text.substr(0, at))) + "'");
    }
    // Accepts the label form too: norm@L8.
    std::string_view lv = trim(text.substr(at + 1));
    if (!lv.empty() && (lv.front() == 'L' || lv.front() == 'l')) {
      lv.remove_prefix(1);
    }
    const auto level = to_integer(lv);
    if (!level || *level < 1 || *level > kNoiseLevels) {
      throw InvalidConfig("noise level must be an integer in 1..15");
    }
    return NoiseSpec::at_level(*family, static_cast<int>(*level));
  }
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw InvalidConfig("noise must look like 'family@level' or 'family(a, b)', got '" +
                        std::string(text) + "'");
  }
  const auto family = parse_noise_family(trim(text.substr(0, open)));
  if (!family) {
    throw InvalidConfig("unknown noise family '" + std::string(trim(text.substr(0, open))) + "'");
  }
  const auto params = split_list(text.substr(open + 1, text.size() - open - 2));
  if (params.empty() || params.size() > 2) {
    throw InvalidConfig("noise takes one or two parameters");
  }
  std::vector<double> p;
  for (const std::string& s : params) {
    const auto v = to_double(s);
    if (!v) {
      throw InvalidConfig("noise parameter '" + s + "' is not a number");
    }
    p.push_back(*v);
  }
  return NoiseSpec::with_params(*family, p[0], p.size() > 1 ? p[1] : 0.0);
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(line_no, "", "unterminated section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string> known{"experiment", "data", "optim", "robust"};
      if (!known.contains(section)) {
        throw ConfigError(line_no, section, "unknown section");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(line_no, "", "expected 'key = value'");
    }
    if (section.empty()) {
      throw ConfigError(line_no, "", "key outside of any [section]");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) {
      throw ConfigError(line_no, "", "empty key");
    }
    const std::string field = section + "." + key;
    if (entries.contains(field)) {
      throw ConfigError(line_no, field, "duplicate key (first set on line " +
                                            std::to_string(entries.at(field).line) + ")");
    }
    entries.emplace(field, Entry{line_no, field, std::string(trim(line.substr(eq + 1)))});
  }

  RunConfig rc;
  bench::ExperimentConfig& x = rc.experiment;

  // Task first: method validation below depends on it.
  const auto task_it = entries.find("experiment.task");
  if (task_it == entries.end()) {
    throw ConfigError(0, "experiment.task", "missing required key");
  }
  if (const auto t = bench::parse_task(task_it->second.value)) {
    x.task = *t;
  } else {
    Reader(task_it->second).fail("unknown task '" + task_it->second.value + "'");
  }
  x.methods = bench::default_methods(x.task);

  using Handler = std::function<void(const Reader&)>;
  const std::map<std::string, Handler> handlers{
      {"experiment.task", [](const Reader&) {}},
      {"experiment.name",
       [&](const Reader& r) {
         const std::string& v = r.text();
         const bool ok = !v.empty() && std::all_of(v.begin(), v.end(), [](char c) {
           return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
         });
         if (!ok || v == "." || v == "..") {
           r.fail("name may only contain letters, digits, '_', '-' and '.'");
         }
         x.name = v;
       }},
      {"experiment.seed", [&](const Reader& r) { x.seed = static_cast<std::uint64_t>(r.integer(0)); }},
      {"experiment.seed_stride",
       [&](const Reader& r) { x.seed_stride = static_cast<std::uint64_t>(r.integer(0)); }},
      {"experiment.trials", [&](const Reader& r) { x.trials = static_cast<int>(r.integer(1)); }},
      {"experiment.parallelism",
       [&](const Reader& r) { rc.parallelism = static_cast<int>(r.integer(1)); }},
      {"experiment.methods",
       [&](const Reader& r) {
         x.methods = r.list();
         for (const std::string& m : x.methods) {
           if (!bench::method_supported(x.task, m)) {
             r.fail("method '" + m + "' is not available for task " +
                    std::string(bench::to_string(x.task)));
           }
         }
       }},
      {"data.n", [&](const Reader& r) { x.n = r.integer(1); }},
      {"data.d", [&](const Reader& r) { x.d = r.integer(1); }},
      {"data.test_size", [&](const Reader& r) { x.test_size = r.integer(1); }},
      {"data.noise",
       [&](const Reader& r) {
         x.noises.clear();
         for (const std::string& item : r.list()) {
           try {
             x.noises.push_back(parse_noise_spec(item));
           } catch (const InvalidConfig& e) {
             r.fail(e.what());
           }
         }
       }},
      {"data.init_delta",
       [&](const Reader& r) {
         x.init_delta = r.number();
         if (!(x.init_delta > 0.0)) {
           r.fail("must be positive");
         }
       }},
      {"data.init_deltas", [&](const Reader& r) { x.init_deltas = r.numbers(); }},
      {"data.n_values",
       [&](const Reader& r) {
         for (long long v : r.integers(1)) {
           x.n_values.push_back(v);
         }
       }},
      {"data.d_values",
       [&](const Reader& r) {
         for (long long v : r.integers(1)) {
           x.d_values.push_back(v);
         }
       }},
      {"data.families",
       [&](const Reader& r) {
         for (const std::string& f : r.list()) {
           const auto fam = parse_noise_family(f);
           if (!fam) {
             r.fail("unknown noise family '" + f + "'");
           }
           x.families.push_back(*fam);
         }
       }},
      {"data.levels",
       [&](const Reader& r) {
         for (long long v : r.integers(1)) {
           if (v > kNoiseLevels) {
             r.fail("levels must lie in 1..15");
           }
           x.levels.push_back(static_cast<int>(v));
         }
       }},
      {"data.n_per_d", [&](const Reader& r) { x.n_per_d = r.integer(1); }},
      {"data.classes",
       [&](const Reader& r) { x.classification.classes = static_cast<int>(r.integer(2)); }},
      {"data.features", [&](const Reader& r) { x.classification.features = r.integer(1); }},
      {"data.spread",
       [&](const Reader& r) {
         x.classification.spread = r.number();
         if (!(x.classification.spread >= 0.0)) {
           r.fail("must be non-negative");
         }
       }},
      {"data.label_noise",
       [&](const Reader& r) {
         x.classification.label_noise = r.number();
         if (!(x.classification.label_noise >= 0.0 && x.classification.label_noise <= 1.0)) {
           r.fail("must lie in [0, 1]");
         }
       }},
      {"data.train", [&](const Reader& r) { rc.train_path = base_dir / r.text(); }},
      {"data.test", [&](const Reader& r) { rc.test_path = base_dir / r.text(); }},
      {"data.label_column", [&](const Reader& r) { rc.label_column = r.text(); }},
      {"optim.alpha",
       [&](const Reader& r) {
         x.alpha = r.number();
         if (!(x.alpha > 0.0)) {
           r.fail("must be positive");
         }
       }},
      {"optim.max_iters", [&](const Reader& r) { x.max_iters = r.integer(1); }},
      {"optim.grad_tol",
       [&](const Reader& r) {
         x.grad_tol = r.number();
         if (!(x.grad_tol >= 0.0)) {
           r.fail("must be non-negative");
         }
       }},
      {"optim.budget_multiple", [&](const Reader& r) { x.budget_multiple = r.integer(1); }},
      {"optim.batch_size", [&](const Reader& r) { x.batch_size = r.integer(1); }},
      {"optim.coordinate_subset",
       [&](const Reader& r) { x.coordinate_subset = static_cast<std::size_t>(r.integer(1)); }},
      {"optim.reg",
       [&](const Reader& r) {
         x.reg = r.number();
         if (!(x.reg >= 0.0)) {
           r.fail("must be non-negative");
         }
       }},
      {"optim.init_box",
       [&](const Reader& r) {
         x.init_box = r.number();
         if (!(x.init_box > 0.0)) {
           r.fail("must be positive");
         }
       }},
      {"robust.rho",
       [&](const Reader& r) {
         const auto k = mest::parse_rho_kind(r.text());
         if (!k) {
           r.fail("unknown rho '" + r.text() + "'");
         }
         if (*k == mest::RhoKind::quadratic_test_only) {
           r.fail("rho 'quadratic' is for tests only");
         }
         x.rho = *k;
       }},
      {"robust.delta",
       [&](const Reader& r) {
         x.delta = r.number();
         if (!(x.delta > 0.0 && x.delta < 1.0)) {
           r.fail("must lie in (0, 1)");
         }
       }},
      {"robust.scale_refresh_every",
       [&](const Reader& r) { x.scale_refresh_every = static_cast<int>(r.integer(1)); }},
  };

  // Apply in line order so errors surface top to bottom.
  std::vector<const Entry*> ordered;
  for (const auto& [field, e] : entries) {
    ordered.push_back(&e);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const Entry* a, const Entry* b) { return a->line < b->line; });
  for (const Entry* e : ordered) {
    const Reader r(*e);
    if (e->field.starts_with("optim.alpha.")) {
      const std::string method = e->field.substr(std::string("optim.alpha.").size());
      if (!bench::method_supported(x.task, method)) {
        r.fail("unknown method '" + method + "'");
      }
      const double a = r.number();
      if (!(a > 0.0)) {
        r.fail("must be positive");
      }
      x.method_alpha[method] = a;
      continue;
    }
    const auto h = handlers.find(e->field);
    if (h == handlers.end()) {
      r.fail("unknown key");
    }
    h->second(r);
  }

  if (rc.train_path.empty() != rc.test_path.empty()) {
    throw ConfigError(0, "data.train", "data.train and data.test must be given together");
  }
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(0, "", "cannot open config file " + path.string());
  }
  return parse_config(in, path.parent_path());
}

std::string describe(const RunConfig& rc) {
  const bench::ExperimentConfig& x = rc.experiment;
  std::ostringstream os;
  os << "[experiment]\n"
     << "name = " << x.name << '\n'
     << "task = " << bench::to_string(x.task) << '\n'
     << "seed = " << x.seed << '\n'
     << "seed_stride = " << x.seed_stride << '\n'
     << "trials = " << x.trials << '\n'
     << "parallelism = " << rc.parallelism << '\n'
     << "methods = " << join(x.methods) << '\n';
  os << "\n[data]\n"
     << "n = " << x.n << '\n'
     << "d = " << x.d << '\n'
     << "test_size = " << x.test_size << '\n';
  std::vector<std::string> noises;
  for (const NoiseSpec& n : x.noises) {
    noises.push_back(noise_text(n));
  }
  if (!noises.empty()) {
    os << "noise = " << join(noises) << '\n';
  }
  os << "init_delta = " << bench::format_number(x.init_delta) << '\n';
  if (!x.init_deltas.empty()) {
    os << "init_deltas = " << join_numbers(x.init_deltas) << '\n';
  }
  if (!x.n_values.empty()) {
    os << "n_values = " << join_numbers(x.n_values) << '\n';
  }
  if (!x.d_values.empty()) {
    os << "d_values = " << join_numbers(x.d_values) << '\n';
  }
  if (!x.families.empty()) {
    std::vector<std::string> f;
    for (NoiseFamily fam : x.families) {
      f.emplace_back(short_name(fam));
    }
    os << "families = " << join(f) << '\n';
  }
  if (!x.levels.empty()) {
    os << "levels = " << join_numbers(x.levels) << '\n';
  }
  if (x.n_per_d > 0) {
    os << "n_per_d = " << x.n_per_d << '\n';
  }
  if (x.task == bench::Task::classification_budget) {
    if (!rc.train_path.empty()) {
      os << "train = " << std::filesystem::absolute(rc.train_path).string() << '\n'
         << "test = " << std::filesystem::absolute(rc.test_path).string() << '\n'
         << "label_column = " << rc.label_column << '\n';
    } else {
      os << "classes = " << x.classification.classes << '\n'
         << "features = " << x.classification.features << '\n'
         << "spread = " << bench::format_number(x.classification.spread) << '\n'
         << "label_noise = " << bench::format_number(x.classification.label_noise) << '\n';
    }
  }
  os << "\n[optim]\n"
     << "alpha = " << bench::format_number(x.alpha) << '\n';
  for (const auto& [m, a] : x.method_alpha) {
    os << "alpha." << m << " = " << bench::format_number(a) << '\n';
  }
  os << "max_iters = " << x.max_iters << '\n'
     << "grad_tol = " << bench::format_number(x.grad_tol) << '\n';
  if (x.task == bench::Task::classification_budget) {
    os << "budget_multiple = " << x.budget_multiple << '\n'
       << "batch_size = " << x.batch_size << '\n'
       << "coordinate_subset = " << x.coordinate_subset << '\n'
       << "reg = " << bench::format_number(x.reg) << '\n'
       << "init_box = " << bench::format_number(x.init_box) << '\n';
  }
  os << "\n[robust]\n"
     << "rho = " << mest::to_string(x.rho) << '\n'
     << "delta = " << bench::format_number(x.delta) << '\n'
     << "scale_refresh_every = " << x.scale_refresh_every << '\n';
  return os.str();
}

}  // namespace rgd
