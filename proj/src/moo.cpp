#include "hetrax/moo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <Eigen/Dense>

#include "hetrax/common.hpp"

namespace hetrax {

bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw Error("dominates: objective vectors of size " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()));
    }
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

// ===========================================================================
// Archive
// ===========================================================================

bool ParetoArchive::accepts(const std::vector<double>& objectives, const std::string& digest) const {
    for (const auto& e : entries_) {
        if (e.digest == digest || dominates(e.objectives, objectives)) return false;
    }
    return true;
}

bool ParetoArchive::insert(ArchiveEntry entry) {
    if (!accepts(entry.objectives, entry.digest)) return false;
    std::erase_if(entries_, [&](const ArchiveEntry& e) { return dominates(entry.objectives, e.objectives); });
    entries_.push_back(std::move(entry));
    return true;
}

std::vector<ArchiveEntry> ParetoArchive::sorted() const {
    auto out = entries_;
    std::sort(out.begin(), out.end(), [](const ArchiveEntry& a, const ArchiveEntry& b) {
        if (a.objectives != b.objectives) return a.objectives < b.objectives;
        return a.digest < b.digest;
    });
    return out;
}

std::vector<std::vector<double>> ParetoArchive::points() const {
    std::vector<std::vector<double>> out;
    for (const auto& e : entries_) out.push_back(e.objectives);
    return out;
}

// ===========================================================================
// Hypervolume
// ===========================================================================

namespace {

// Slices along the last used coordinate; exact for any dimension.
double hv_slice(std::vector<std::vector<double>>& pts, const std::vector<double>& ref, std::size_t dims) {
    if (pts.empty()) return 0.0;
    const std::size_t k = dims - 1;
    if (dims == 1) {
        double best = ref[0];
        for (const auto& p : pts) best = std::min(best, p[0]);
        return ref[0] - best;
    }
    std::sort(pts.begin(), pts.end(), [k](const auto& a, const auto& b) { return a[k] < b[k]; });
    if (dims == 2) {
        double vol = 0.0;
        double best_x = ref[0];
        // sweep in y: each point extends the covered x-range for the strip above it
        for (std::size_t i = 0; i < pts.size(); ++i) {
            best_x = std::min(best_x, pts[i][0]);
            const double upper = i + 1 < pts.size() ? pts[i + 1][1] : ref[1];
            vol += (ref[0] - best_x) * (upper - pts[i][1]);
        }
        return vol;
    }
    double vol = 0.0;
    std::vector<std::vector<double>> prefix;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        prefix.push_back(pts[i]);
        const double upper = i + 1 < pts.size() ? pts[i + 1][k] : ref[k];
        if (upper <= pts[i][k]) continue;
        auto slice = prefix;
        vol += (upper - pts[i][k]) * hv_slice(slice, ref, dims - 1);
    }
    return vol;
}

}  // namespace

double hypervolume(std::vector<std::vector<double>> points, const std::vector<double>& ref) {
    std::erase_if(points, [&](const std::vector<double>& p) {
        if (p.size() != ref.size()) throw Error("hypervolume: point and reference dimensions differ");
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!(p[i] < ref[i])) return true;
        }
        return false;
    });
    if (points.empty() || ref.empty()) return 0.0;
    return hv_slice(points, ref, ref.size());
}

Bounds bounds_of(const std::vector<std::vector<double>>& points) {
    Bounds b;
    if (points.empty()) return b;
    b.lo = points.front();
    b.hi = points.front();
    for (const auto& p : points) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            b.lo[i] = std::min(b.lo[i], p[i]);
            b.hi[i] = std::max(b.hi[i], p[i]);
        }
    }
    return b;
}

std::vector<std::vector<double>> normalize(const std::vector<std::vector<double>>& points, const Bounds& b) {
    std::vector<std::vector<double>> out = points;
    for (auto& p : out) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double w = b.hi[i] - b.lo[i];
            p[i] = w > 0.0 ? (p[i] - b.lo[i]) / w : 0.0;
        }
    }
    return out;
}

double archive_hypervolume(const ParetoArchive& archive) {
    if (archive.empty()) return 0.0;
    const auto pts = archive.points();
    return hypervolume(normalize(pts, bounds_of(pts)), std::vector<double>(pts.front().size(), 1.1));
}

// ===========================================================================
// Search
// ===========================================================================

std::string to_string(Guidance g) {
    return g == Guidance::Off ? "off" : "learned";
}

Guidance guidance_from_string(const std::string& s) {
    if (s == "off") return Guidance::Off;
    if (s == "learned") return Guidance::Learned;
    throw Error("unknown guidance '" + s + "' (expected off or learned)");
}

void SearchConfig::validate() const {
    if (epochs < 1) throw Error("search: epochs must be >= 1");
    if (perturbations < 1) throw Error("search: perturbations must be >= 1");
    if (max_steps < 1) throw Error("search: max_steps must be >= 1");
    if (rho < 0.0) throw Error("search: rho must be >= 0");
}

std::string SearchConfig::describe() const {
    std::ostringstream os;
    os << "epochs=" << epochs << " perturbations=" << perturbations << " objectives=" << to_string(objectives)
       << " seed=" << seed << " guidance=" << to_string(guidance) << " max_steps=" << max_steps
       << " shared_start=" << (shared_start ? 1 : 0) << " rho=" << format_double(rho);
    return os.str();
}

std::vector<double> start_features(const Evaluation& eval) {
    std::vector<double> f = eval.level_power;
    f.push_back(static_cast<double>(eval.reram_level));
    f.push_back(static_cast<double>(eval.link_count));
    f.push_back(eval.mean_radix);
    return f;
}

bool fit_guidance(const std::vector<GuidanceSample>& history, std::vector<double>& coefficients) {
    if (history.size() < 5) return false;
    const std::size_t n = history.size();
    const std::size_t k = history.front().features.size() + 1;
    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (std::size_t j = 1; j < k; ++j) X(i, j) = history[i].features.at(j - 1);
        y(i) = history[i].outcome;
    }
    if ((y.array() - y.mean()).abs().maxCoeff() <= 1e-15) return false;
    // scale columns so the rank test is not dominated by units
    Eigen::VectorXd scale(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double m = X.col(j).cwiseAbs().maxCoeff();
        scale(j) = m > 0.0 ? m : 1.0;
        X.col(j) /= scale(j);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    // collinear features (link count and mean radix on a fixed inventory) get a zero
    // coefficient from the basic solution; only an intercept-only fit is degenerate
    if (qr.rank() < 2) return false;
    Eigen::VectorXd beta = qr.solve(y);
    coefficients.assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) coefficients[j] = beta(j) / scale(j);
    return std::all_of(coefficients.begin(), coefficients.end(), [](double c) { return std::isfinite(c); });
}

double predict_guidance(const std::vector<double>& coefficients, const std::vector<double>& features) {
    double v = coefficients.at(0);
    for (std::size_t j = 0; j < features.size(); ++j) v += coefficients.at(j + 1) * features[j];
    return v;
}

GuidanceChoice stage_guidance(const Evaluator& evaluator, const std::vector<GuidanceSample>& history,
                              std::uint64_t seed) {
    GuidanceChoice choice;
    const auto& platform = evaluator.platform();
    std::vector<double> beta;
    if (history.size() < 5) {
        choice.start = random_placement(platform, seed);
        choice.reason = "fewer than 5 completed trajectories";
        return choice;
    }
    if (!fit_guidance(history, beta)) {
        choice.start = random_placement(platform, seed);
        choice.reason = "degenerate fit";
        return choice;
    }
    Rng rng(seed);
    double best_value = -INFINITY;
    for (int r = 0; r < 4; ++r) {
        Placement cur = random_placement(platform, rng.next());
        double cur_value = predict_guidance(beta, start_features(evaluator.evaluate(cur)));
        for (int step = 0; step < 8; ++step) {
            auto moves = candidate_moves(platform, cur);
            rng.shuffle(moves);
            bool improved = false;
            for (const auto& m : moves) {
                Placement next = apply_move(platform, cur, m);
                if (!is_valid(platform, next)) continue;
                const double v = predict_guidance(beta, start_features(evaluator.evaluate(next)));
                if (v > cur_value) {
                    cur = std::move(next);
                    cur_value = v;
                    improved = true;
                    break;
                }
            }
            if (!improved) break;
        }
        if (cur_value > best_value) {
            best_value = cur_value;
            choice.start = cur;
        }
    }
    choice.fallback = false;
    choice.reason = "predicted outcome " + format_double(best_value);
    return choice;
}

namespace {

struct Candidate {
    Placement placement;
    Evaluation eval;
    std::string origin;
};

struct TrajectoryOutput {
    std::vector<Candidate> evaluated;  ///< first evaluations in this trajectory, in order
    double outcome = 0.0;              ///< hypervolume of the local archive in the epoch frame
    std::string error;
};

using EvalCache = std::unordered_map<std::string, Evaluation>;

struct Frame {
    std::vector<double> ideal;
    std::vector<double> scale;
};

Frame frame_of(const std::vector<std::vector<double>>& points) {
    Frame f;
    auto b = bounds_of(points);
    f.ideal = b.lo;
    f.scale.resize(b.lo.size());
    for (std::size_t i = 0; i < b.lo.size(); ++i) {
        const double w = b.hi[i] - b.lo[i];
        f.scale[i] = w > 0.0 ? w : (std::abs(b.lo[i]) > 0.0 ? std::abs(b.lo[i]) : 1.0);
    }
    return f;
}

double tchebycheff(const std::vector<double>& f, const std::vector<double>& w, const Frame& fr, double rho) {
    double worst = -INFINITY;
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double t = w[i] * (f[i] - fr.ideal[i]) / fr.scale[i];
        worst = std::max(worst, t);
        sum += t;
    }
    return worst + rho * sum;
}

class Trajectory {
public:
    Trajectory(const Evaluator& ev, const SearchConfig& cfg, const EvalCache& global, const ParetoArchive& snapshot,
               std::uint64_t seed, std::string tag)
        : ev_(ev), cfg_(cfg), global_(global), local_(snapshot), rng_(seed), tag_(std::move(tag)) {}

    TrajectoryOutput run(const Placement& start, const Evaluation& start_eval) {
        TrajectoryOutput out;
        const auto& platform = ev_.platform();
        std::vector<std::vector<double>> pts = local_.points();
        pts.push_back(start_eval.objectives(cfg_.objectives));
        const Frame frame = frame_of(pts);

        std::vector<double> w(pts.back().size());
        double wsum = 0.0;
        for (auto& x : w) {
            x = 0.05 + rng_.unit();
            wsum += x;
        }
        for (auto& x : w) x /= wsum;

        Placement cur = start;
        auto cur_obj = start_eval.objectives(cfg_.objectives);
        local_.insert({start_eval.digest, cur_obj, cur, start_eval, tag_ + ".s0"});
        double cur_score = tchebycheff(cur_obj, w, frame, cfg_.rho);

        try {
            for (int step = 1; step <= cfg_.max_steps; ++step) {
                auto moves = candidate_moves(platform, cur);
                rng_.shuffle(moves);
                bool accepted = false;
                for (const auto& m : moves) {
                    Placement next = apply_move(platform, cur, m);
                    if (!is_valid(platform, next)) continue;
                    const Evaluation& e = lookup(next, tag_ + ".s" + std::to_string(step), out);
                    auto obj = e.objectives(cfg_.objectives);
                    const bool inserted = local_.insert({e.digest, obj, next, e, tag_ + ".s" + std::to_string(step)});
                    const double score = tchebycheff(obj, w, frame, cfg_.rho);
                    if (inserted || score < cur_score) {
                        cur = std::move(next);
                        cur_score = score;
                        accepted = true;
                        break;
                    }
                }
                if (!accepted) break;
            }
        } catch (const Error& err) {
            out.error = tag_ + ": " + err.what();
        }

        auto local_pts = local_.points();
        std::vector<double> ref(frame.ideal.size(), 1.1);
        Bounds b;
        b.lo = frame.ideal;
        b.hi = frame.ideal;
        for (std::size_t i = 0; i < b.hi.size(); ++i) b.hi[i] += frame.scale[i];
        out.outcome = hypervolume(normalize(local_pts, b), ref);
        return out;
    }

private:
    const Evaluation& lookup(const Placement& p, const std::string& origin, TrajectoryOutput& out) {
        const std::string digest = placement_digest(ev_.platform(), p);
        if (auto it = global_.find(digest); it != global_.end()) return it->second;
        if (auto it = own_.find(digest); it != own_.end()) return it->second;
        Evaluation e;
        try {
            e = ev_.evaluate(p);
        } catch (const Error& err) {
            throw Error("candidate " + digest + ": " + err.what());
        }
        out.evaluated.push_back({p, e, origin});
        return own_.emplace(digest, std::move(e)).first->second;
    }

    const Evaluator& ev_;
    const SearchConfig& cfg_;
    const EvalCache& global_;
    ParetoArchive local_;
    Rng rng_;
    std::string tag_;
    EvalCache own_;
};

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return splitmix64(seed ^ splitmix64(a * 0x100000001b3ULL + b + 0x632be59bd9b4e019ULL));
}

}  // namespace

SearchResult moo_search(const Evaluator& evaluator, const SearchConfig& config) {
    config.validate();
    SearchResult res;
    res.archive.seed = config.seed;
    res.archive.config = config.describe();
    const auto& platform = evaluator.platform();

    EvalCache cache;
    std::vector<GuidanceSample> history;
    std::vector<std::vector<std::vector<double>>> snapshots;

    auto evaluate_start = [&](const Placement& p, const std::string& origin) -> Evaluation {
        const std::string digest = placement_digest(platform, p);
        if (auto it = cache.find(digest); it != cache.end()) return it->second;
        Evaluation e = evaluator.evaluate(p);
        cache.emplace(digest, e);
        res.archive.insert({digest, e.objectives(config.objectives), p, e, origin});
        return e;
    };

    const int P = config.perturbations;
    const int workers = std::max(1, std::min(config.jobs, P));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // starts are chosen before any trajectory runs so threading cannot affect them
        std::vector<Placement> starts(P);
        std::vector<Evaluation> start_evals(P);
        for (int t = 0; t < P; ++t) {
            if (t > 0 && config.shared_start) {
                starts[t] = starts[0];
                start_evals[t] = start_evals[0];
                continue;
            }
            const std::uint64_t s = mix(config.seed, static_cast<std::uint64_t>(epoch), 1000 + t);
            if (config.guidance == Guidance::Learned) {
                auto g = stage_guidance(evaluator, history, s);
                starts[t] = g.start;
                if (g.fallback) {
                    ++res.fallback_starts;
                    res.log.push_back("epoch " + std::to_string(epoch) + ": guidance fallback (" + g.reason + ")");
                } else {
                    ++res.guided_starts;
                }
            } else {
                starts[t] = random_placement(platform, s);
            }
            start_evals[t] = evaluate_start(starts[t], "e" + std::to_string(epoch) + ".start");
        }

        const ParetoArchive snapshot = res.archive;
        std::vector<TrajectoryOutput> outs(P);
        std::atomic<int> next{0};
        auto work = [&] {
            for (int t = next++; t < P; t = next++) {
                Trajectory tr(evaluator, config, cache, snapshot, mix(config.seed, epoch, t),
                              "e" + std::to_string(epoch) + ".t" + std::to_string(t));
                outs[t] = tr.run(starts[t], start_evals[t]);
            }
        };
        if (workers == 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (int i = 0; i < workers; ++i) pool.emplace_back(work);
            for (auto& th : pool) th.join();
        }

        // merge in trajectory order, then evaluation order
        for (int t = 0; t < P; ++t) {
            if (!outs[t].error.empty()) res.log.push_back("trajectory aborted: " + outs[t].error);
            for (auto& c : outs[t].evaluated) {
                if (!cache.emplace(c.eval.digest, c.eval).second) continue;
                auto obj = c.eval.objectives(config.objectives);
                res.archive.insert({c.eval.digest, std::move(obj), std::move(c.placement), c.eval, c.origin});
            }
            history.push_back({start_features(start_evals[t]), outs[t].outcome});
        }
        snapshots.push_back(res.archive.points());
    }

    res.evaluations = cache.size();
    const auto final_pts = res.archive.points();
    const Bounds frame = bounds_of(final_pts);
    const std::vector<double> ref(objective_count(config.objectives), 1.1);
    for (const auto& snap : snapshots) res.hv_trace.push_back(hypervolume(normalize(snap, frame), ref));
    return res;
}

// ===========================================================================
// Enumeration
// ===========================================================================

namespace {

double multinomial(const std::map<CoreKind, int>& population) {
    double n = 0.0;
    double r = 1.0;
    for (const auto& [kind, count] : population) {
        for (int i = 1; i <= count; ++i) {
            n += 1.0;
            r = r * n / i;
        }
    }
    return r;
}

std::vector<Link> optional_links(const Platform& platform, const std::vector<int>& order) {
    std::vector<Link> out;
    for (int t = 0; t < platform.tier_count(); ++t) {
        auto c = planar_candidates(platform, t);
        out.insert(out.end(), c.begin(), c.end());
    }
    for (std::size_t lvl = 0; lvl + 1 < order.size(); ++lvl) {
        auto v = vertical_candidates(platform, order[lvl], order[lvl + 1]);
        out.insert(out.end(), v.begin(), v.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

double design_space_estimate(const Platform& platform) {
    platform.validate();
    const int T = platform.tier_count();
    double orders = 1.0;
    for (int i = 2; i <= T; ++i) orders *= i;
    double arrangements = 1.0;
    for (const auto& t : platform.tiers) arrangements *= multinomial(t.population);
    std::vector<int> order(T);
    std::iota(order.begin(), order.end(), 0);
    const double links = std::ldexp(1.0, static_cast<int>(optional_links(platform, order).size()));
    return orders * arrangements * links;
}

ParetoArchive brute_force_pareto(const Evaluator& evaluator, ObjectiveSet objectives, double limit) {
    const auto& platform = evaluator.platform();
    const double estimate = design_space_estimate(platform);
    if (estimate > limit) {
        throw Error("brute force refused: about " + format_double(estimate) + " candidate placements (limit " +
                    format_double(limit) + ")");
    }
    ParetoArchive archive;
    const int T = platform.tier_count();
    const auto fixed = fixed_links(platform);

    // per tier: every distinct kind arrangement over its slots, as core slot lists
    std::vector<std::vector<std::vector<int>>> tier_layouts(T);
    const auto kinds = platform.core_kinds();
    const auto core_tier = platform.core_tiers();
    for (int t = 0; t < T; ++t) {
        std::vector<int> cores;
        for (int c = 0; c < platform.core_count(); ++c) {
            if (core_tier[c] == t) cores.push_back(c);
        }
        std::vector<CoreKind> arrangement;
        for (int c : cores) arrangement.push_back(kinds[c]);
        std::sort(arrangement.begin(), arrangement.end());
        const int off = platform.tier_offset(t);
        do {
            // cores of a kind take that kind's slots in ascending order
            std::vector<int> slot_of(cores.size());
            std::vector<char> used(arrangement.size(), 0);
            for (std::size_t i = 0; i < cores.size(); ++i) {
                for (std::size_t s = 0; s < arrangement.size(); ++s) {
                    if (!used[s] && arrangement[s] == kinds[cores[i]]) {
                        used[s] = 1;
                        slot_of[i] = off + static_cast<int>(s);
                        break;
                    }
                }
            }
            tier_layouts[t].push_back(slot_of);
        } while (std::next_permutation(arrangement.begin(), arrangement.end()));
    }

    std::vector<int> order(T);
    std::iota(order.begin(), order.end(), 0);
    do {
        const auto optional = optional_links(platform, order);
        std::vector<Link> free_links;
        for (const auto& l : optional) {
            if (!std::binary_search(fixed.begin(), fixed.end(), l)) free_links.push_back(l);
        }
        std::vector<std::size_t> pick(T, 0);
        while (true) {
            Placement p;
            p.tier_order = order;
            for (int t = 0; t < T; ++t) {
                const auto& lay = tier_layouts[t][pick[t]];
                p.core_slot.insert(p.core_slot.end(), lay.begin(), lay.end());
            }
            const std::uint64_t subsets = std::uint64_t{1} << free_links.size();
            for (std::uint64_t mask = 0; mask < subsets; ++mask) {
                p.links = fixed;
                for (std::size_t i = 0; i < free_links.size(); ++i) {
                    if (mask >> i & 1U) p.links.push_back(free_links[i]);
                }
                std::sort(p.links.begin(), p.links.end());
                if (!is_valid(platform, p)) continue;
                Evaluation e = evaluator.evaluate(p);
                auto obj = e.objectives(objectives);
                archive.insert({e.digest, std::move(obj), p, std::move(e), "enum"});
            }
            int t = 0;
            while (t < T && ++pick[t] == tier_layouts[t].size()) pick[t++] = 0;
            if (t == T) break;
        }
    } while (std::next_permutation(order.begin(), order.end()));
    archive.config = "brute-force objectives=" + to_string(objectives);
    return archive;
}

}  // namespace hetrax
