#include "nowcast/synthgen.hpp"

#include "nowcast/error.hpp"
#include "nowcast/schema.hpp"
#include "nowcast/seeding.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace nowcast {

std::string to_string(Selection s) {
    switch (s) {
    case Selection::mcar: return "mcar";
    case Selection::mar: return "mar";
    case Selection::nmar: return "nmar";
    }
    return "unknown";
}

namespace {

constexpr std::size_t kNumChannels = kChannels.size();

// Canonical field positions.
constexpr std::size_t kAge = 0, kGender = 1, kEducation = 2, kSizeBefore = 8;

const std::vector<std::vector<double>>& base_logits() {
    static const std::vector<std::vector<double>> v = {
        {},
        {0.0, -0.2},
        {-1.0, 0.3, 0.0, -0.3, 0.4, -1.5},
        {0.6, 0.3, 0.0, 0.0, -0.2, -0.3, 0.1, -0.4},
        {0.2, 0.4, 0.1, 0.0, -0.1, -0.3, 0.3, -0.2},
        {0.4, 0.2, 0.0, -0.2, -0.1},
        {0.6, 0.3, 0.0, 0.0, -0.2, -0.3, 0.1, -0.4},
        {0.2, 0.4, 0.1, 0.0, -0.1, -0.3, 0.3, -0.2},
        {0.4, 0.2, 0.0, -0.2, -0.1},
    };
    return v;
}

double logistic(double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

/// Probabilists' Gauss-Hermite rule: E[f(Z)], Z ~ N(0,1) ~ sum w_k f(x_k).
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const Quadrature& hermite() {
    static const Quadrature q = [] {
        constexpr int n = 64;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
        Quadrature out;
        for (int k = 0; k < n; ++k) {
            out.nodes.push_back(es.eigenvalues()(k));
            const double v = es.eigenvectors()(0, k);
            out.weights.push_back(v * v);
        }
        return out;
    }();
    return q;
}

/// Period-specific population parameters.
struct Population {
    std::vector<double> share;                            // per channel
    std::vector<double> age_mean;                         // per channel
    std::vector<std::vector<std::vector<double>>> levels; // [channel][field][level]
};

std::vector<double> softmax(std::vector<double> v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (auto& x : v) {
        x = std::exp(x - mx);
        s += x;
    }
    for (auto& x : v) x /= s;
    return v;
}

Population population(const PopulationSpec& spec, int t) {
    Population pop;
    const bool h2 = spec.period(t).half == Half::H2;
    std::vector<double> logits(kNumChannels);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        logits[c] = spec.channel_share[c] + spec.channel_trend[c] * t + (h2 ? spec.channel_season[c] : 0.0);
    }
    pop.share = softmax(logits);
    const auto& base = base_logits();
    pop.levels.resize(kNumChannels);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        pop.age_mean.push_back(spec.age_mean + spec.age_channel[c] + spec.age_drift * t);
        pop.levels[c].resize(base.size());
        for (std::size_t f = 1; f < base.size(); ++f) {
            const double L = static_cast<double>(base[f].size());
            std::vector<double> lg(base[f].size());
            for (std::size_t l = 0; l < lg.size(); ++l) {
                lg[l] = base[f][l] + (spec.channel_tilt[c] + spec.level_drift * t) * static_cast<double>(l) / (L - 1.0);
            }
            pop.levels[c][f] = softmax(lg);
        }
    }
    return pop;
}

double label_eta(const PopulationSpec& spec, int t, double z, std::size_t gender, std::size_t edu, std::size_t size) {
    return spec.label_intercept + spec.label_trend * t + spec.label_age * z + spec.label_gender[gender] +
           spec.label_education[edu] + spec.label_size_before[size];
}

double mar_prob(const PopulationSpec& spec, int t, double z, std::size_t edu, std::size_t size) {
    return logistic(spec.mar_intercept + spec.mar_age * (z - spec.mar_age_drift * t) + spec.mar_education[edu] +
                    spec.mar_size_before[size]);
}

/// Keep probabilities for y = 1 and y = 0.
std::pair<double, double> keep_probs(const PopulationSpec& spec, int t, double z, std::size_t edu, std::size_t size,
                                     double q) {
    switch (spec.selection) {
    case Selection::mcar: return {spec.mcar_p, spec.mcar_p};
    case Selection::mar: {
        const double m = mar_prob(spec, t, z, edu, size);
        return {m, m};
    }
    case Selection::nmar: {
        const double m = mar_prob(spec, t, z, edu, size);
        const double r = (1.0 - spec.kappa * q) / (spec.kappa * (1.0 - q));
        return {m * std::min(1.0, 1.0 / r), m * std::min(1.0, r)};
    }
    }
    return {0.0, 0.0};
}

double z_of(const PopulationSpec& spec, double age) { return (age - spec.age_mean) / spec.age_sd; }

/// E over the period-t population (age shifted by `shift`) of g(z, gender, edu, size).
double expect(const PopulationSpec& spec, const Population& pop, int t, double shift,
              const std::function<double(double, std::size_t, std::size_t, std::size_t)>& g) {
    (void)t;
    const auto& gh = hermite();
    double total = 0.0;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        const auto& lv = pop.levels[c];
        double acc = 0.0;
        for (std::size_t ge = 0; ge < lv[kGender].size(); ++ge)
            for (std::size_t ed = 0; ed < lv[kEducation].size(); ++ed)
                for (std::size_t sz = 0; sz < lv[kSizeBefore].size(); ++sz) {
                    const double pc = lv[kGender][ge] * lv[kEducation][ed] * lv[kSizeBefore][sz];
                    double inner = 0.0;
                    for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
                        const double age = pop.age_mean[c] + shift + spec.age_sd * gh.nodes[k];
                        inner += gh.weights[k] * g(z_of(spec, age), ge, ed, sz);
                    }
                    acc += pc * inner;
                }
        total += pop.share[c] * acc;
    }
    return total;
}

double normal_pdf(double x, double mu, double sd) {
    const double u = (x - mu) / sd;
    return std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * M_PI));
}

/// Density of the attribute row under the period population with age shift.
double population_density(const Population& pop, const PopulationSpec& spec, double shift,
                          std::span<const double> x) {
    double total = 0.0;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        double d = pop.share[c] * normal_pdf(x[kAge], pop.age_mean[c] + shift, spec.age_sd);
        for (std::size_t f = 1; f < pop.levels[c].size(); ++f) {
            d *= pop.levels[c][f][static_cast<std::size_t>(x[f])];
        }
        total += d;
    }
    return total;
}

std::size_t draw_index(const std::vector<double>& p, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(rng);
    double c = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        c += p[i];
        if (r < c) return i;
    }
    return p.size() - 1;
}

std::vector<double> draw_attributes(const PopulationSpec& spec, const Population& pop, std::size_t c, double shift,
                                    Rng& rng) {
    std::vector<double> x(base_logits().size());
    std::normal_distribution<double> n01;
    x[kAge] = pop.age_mean[c] + shift + spec.age_sd * n01(rng);
    for (std::size_t f = 1; f < x.size(); ++f) {
        x[f] = static_cast<double>(draw_index(pop.levels[c][f], rng));
    }
    return x;
}

void check_len(const std::vector<double>& v, std::size_t n, const char* key) {
    if (v.size() != n) {
        throw Error(std::string("spec key '") + key + "' needs " + std::to_string(n) + " values, got " +
                    std::to_string(v.size()));
    }
}

} // namespace

void PopulationSpec::validate() const {
    if (periods < 1) throw Error("spec key 'periods' must be >= 1");
    if (survey_rows < 1) throw Error("spec key 'survey_rows' must be >= 1");
    if (agency_rows < 1) throw Error("spec key 'agency_rows' must be >= 1");
    if (!(part_time_rate >= 0.0 && part_time_rate < 1.0)) throw Error("spec key 'part_time_rate' must lie in [0, 1)");
    if (!(pop_size > 0.0)) throw Error("spec key 'pop_size' must be positive");
    if (!(age_sd > 0.0)) throw Error("spec key 'age_sd' must be positive");
    for (const auto* v : {&channel_share, &channel_trend, &channel_season, &survey_oversample, &channel_tilt,
                          &age_channel}) {
        check_len(*v, kNumChannels, "channel vector");
    }
    for (const double o : survey_oversample) {
        if (!(o > 0.0)) throw Error("spec key 'survey_oversample' must be positive");
    }
    check_len(label_gender, 2, "label_gender");
    check_len(label_education, 6, "label_education");
    check_len(label_size_before, 5, "label_size_before");
    check_len(mar_education, 6, "mar_education");
    check_len(mar_size_before, 5, "mar_size_before");
    if (!(label_cap > 0.0 && label_cap < 1.0)) throw Error("spec key 'label_cap' must lie in (0, 1)");
    if (selection == Selection::mcar && !(mcar_p > 0.0 && mcar_p <= 1.0)) {
        throw Error("degenerate selection: mcar_p must lie in (0, 1]");
    }
    if (selection == Selection::nmar) {
        if (!(kappa > 0.0)) throw Error("spec key 'kappa' must be positive");
        if (kappa * label_cap >= 1.0) {
            throw Error("degenerate selection: kappa * label_cap must stay below 1 so that kappa q(x) is a probability");
        }
    }
}

const PeriodTruth& GroundTruth::at(HalfYearPeriod p) const {
    for (const auto& pt : periods) {
        if (pt.period == p) return pt;
    }
    throw Error("no ground truth for period " + p.to_string());
}

double label_probability(const PopulationSpec& spec, int t, std::span<const double> x) {
    return spec.label_cap * logistic(label_eta(spec, t, z_of(spec, x[kAge]), static_cast<std::size_t>(x[kGender]),
                                               static_cast<std::size_t>(x[kEducation]),
                                               static_cast<std::size_t>(x[kSizeBefore])));
}

GroundTruth compute_truth(const PopulationSpec& spec) {
    spec.validate();
    GroundTruth gt;
    gt.spec = spec;
    gt.beta = spec.selection == Selection::nmar ? 1.0 / spec.kappa : 1.0;
    for (int t = 0; t < spec.periods; ++t) {
        const auto pop = population(spec, t);
        const auto q = [&](double z, std::size_t ge, std::size_t ed, std::size_t sz) {
            return spec.label_cap * logistic(label_eta(spec, t, z, ge, ed, sz));
        };
        PeriodTruth pt;
        pt.period = spec.period(t);
        pt.channel_share = pop.share;
        pt.indicator = 100.0 * expect(spec, pop, t, 0.0, q);
        const double shift = spec.agency_age_shift;
        const double accept = expect(spec, pop, t, shift, [&](double z, std::size_t ge, std::size_t ed, std::size_t sz) {
            const double qq = q(z, ge, ed, sz);
            const auto [s1, s0] = keep_probs(spec, t, z, ed, sz, qq);
            return qq * s1 + (1.0 - qq) * s0;
        });
        const double pos = expect(spec, pop, t, shift, [&](double z, std::size_t ge, std::size_t ed, std::size_t sz) {
            const double qq = q(z, ge, ed, sz);
            return qq * keep_probs(spec, t, z, ed, sz, qq).first;
        });
        if (!(accept > 0.0)) {
            throw Error("degenerate selection: zero acceptance probability in " + pt.period.to_string());
        }
        pt.acceptance = accept;
        pt.agency_rate = 100.0 * pos / accept;
        gt.periods.push_back(pt);
    }
    return gt;
}

double true_ratio(const GroundTruth& gt, HalfYearPeriod period, std::span<const double> x) {
    const auto& spec = gt.spec;
    const int t = distance(spec.start, period);
    if (t < 0 || t >= spec.periods) {
        throw Error("period " + period.to_string() + " is outside the synthetic range");
    }
    if (x.size() != base_logits().size()) {
        throw Error("true_ratio expects a canonical-schema attribute row");
    }
    const auto pop = population(spec, t);
    const double q = label_probability(spec, t, x);
    const auto [s1, s0] = keep_probs(spec, t, z_of(spec, x[kAge]), static_cast<std::size_t>(x[kEducation]),
                                     static_cast<std::size_t>(x[kSizeBefore]), q);
    const double keep = q * s1 + (1.0 - q) * s0;
    const double source = population_density(pop, spec, spec.agency_age_shift, x) * keep;
    if (!(source > 0.0)) {
        throw Error("zero source density at the given point");
    }
    return population_density(pop, spec, 0.0, x) * gt.at(period).acceptance / source;
}

SyntheticData generate(const PopulationSpec& spec) {
    SyntheticData out;
    out.truth = compute_truth(spec);
    const auto schema = canonical_schema();
    Rng aux_rng(derive_seed(spec.seed, "aux"));
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    for (std::size_t c = 0; c < kNumChannels; ++c) {
        out.counts.push_back({std::string(kChannels[c]), spec.start, {}});
    }

    for (int t = 0; t < spec.periods; ++t) {
        const auto period = spec.period(t);
        const auto pop = population(spec, t);

        // Survey: channel-stratified with oversampling, weights undo it.
        Rng rng(derive_seed(spec.seed, "survey:" + period.to_string()));
        std::vector<double> draw_p(kNumChannels);
        double norm = 0.0;
        for (std::size_t c = 0; c < kNumChannels; ++c) {
            draw_p[c] = pop.share[c] * spec.survey_oversample[c];
            norm += draw_p[c];
        }
        for (auto& p : draw_p) p /= norm;
        SampleTable survey{schema, period, Source::survey, {}};
        SampleTable survey_pt{schema, period, Source::survey, {}};
        const auto survey_row = [&](bool part_time) {
            const std::size_t c = draw_index(draw_p, rng);
            Row r;
            r.attributes = draw_attributes(spec, pop, c, 0.0, rng);
            r.channel = std::string(kChannels[c]);
            r.weight = spec.pop_size * norm / (spec.survey_rows * spec.survey_oversample[c]);
            r.label = LabelValue::binary(u01(rng) < label_probability(spec, t, r.attributes) ? 1 : 0);
            r.part_time = part_time;
            return r;
        };
        for (int i = 0; i < spec.survey_rows; ++i) {
            survey.rows.push_back(survey_row(false));
            if (u01(rng) < spec.part_time_rate) survey_pt.rows.push_back(survey_row(true));
        }

        // Replicated channel counts, as the pipeline would derive them.
        {
            std::vector<double> quotas;
            const double scale = static_cast<double>(survey.rows.size()) / survey.total_weight();
            for (const auto& r : survey.rows) quotas.push_back(r.weight * scale);
            const auto reps = largest_remainder(quotas);
            std::vector<double> per(kNumChannels, 0.0);
            for (std::size_t i = 0; i < reps.size(); ++i) {
                const auto c = static_cast<std::size_t>(
                    std::find(kChannels.begin(), kChannels.end(), survey.rows[i].channel) - kChannels.begin());
                per[c] += static_cast<double>(reps[i]);
            }
            for (std::size_t c = 0; c < kNumChannels; ++c) out.counts[c].counts.push_back(per[c]);
        }

        // Agency: population draws (age shifted) kept by the selection rule.
        Rng arng(derive_seed(spec.seed, "agency:" + period.to_string()));
        SampleTable agency{schema, period, Source::agency, {}};
        SampleTable agency_pt{schema, period, Source::agency, {}};
        const std::size_t max_attempts = static_cast<std::size_t>(spec.agency_rows) * 100000;
        std::size_t attempts = 0;
        while (agency.rows.size() < static_cast<std::size_t>(spec.agency_rows)) {
            if (++attempts > max_attempts) {
                throw Error("degenerate selection: acceptance too rare in " + period.to_string());
            }
            const std::size_t c = draw_index(pop.share, arng);
            auto x = draw_attributes(spec, pop, c, spec.agency_age_shift, arng);
            const double q = label_probability(spec, t, x);
            const int y = u01(arng) < q ? 1 : 0;
            const auto [s1, s0] = keep_probs(spec, t, z_of(spec, x[kAge]), static_cast<std::size_t>(x[kEducation]),
                                             static_cast<std::size_t>(x[kSizeBefore]), q);
            if (!(u01(arng) < (y ? s1 : s0))) continue;
            // Wage ratio 1.1 exp(0.1 l), l logistic truncated to the label's side
            // and kept at least 1e-3 away from the threshold.
            const double edge = logistic(1e-3);
            const double u = y ? edge + (1.0 - edge) * u01(arng) : (1.0 - edge) * u01(arng);
            const double ell = std::log(u / (1.0 - u));
            Row r;
            r.attributes = std::move(x);
            r.channel = std::string(kAgencyChannel);
            const double before = 300.0 * std::exp(0.25 * n01(arng));
            const double after = before * kWageRatioThreshold * std::exp(0.1 * ell);
            r.wages = WagePair{before, after};
            r.label = LabelValue::ratio(after / before);
            if (u01(arng) < spec.part_time_rate) {
                Row pt = r;
                pt.part_time = true;
                agency_pt.rows.push_back(std::move(pt));
            }
            agency.rows.push_back(std::move(r));
        }

        // Indicators: the official value is the exact population indicator.
        double pos = 0.0;
        for (const auto& r : agency.rows) pos += r.label->binary_view();
        out.indicators.points[period] = {out.truth.periods[static_cast<std::size_t>(t)].indicator,
                                         100.0 * pos / static_cast<double>(agency.rows.size())};

        // Monthly auxiliary counts following the public channel's population size.
        const int first = period.half == Half::H1 ? 1 : 7;
        for (int m = first; m < first + 6; ++m) {
            const double v = spec.pop_size * pop.share[0] / 6.0 * (1.0 + spec.aux_noise * n01(aux_rng));
            out.aux.months.push_back({period.year, m, std::max(0.0, v)});
        }

        out.survey.push_back(std::move(survey));
        out.survey_part_time.push_back(std::move(survey_pt));
        out.agency.push_back(std::move(agency));
        out.agency_part_time.push_back(std::move(agency_pt));
    }
    return out;
}

nlohmann::json truth_to_json(const GroundTruth& gt) {
    nlohmann::json j;
    j["selection"] = to_string(gt.spec.selection);
    j["kappa"] = gt.spec.kappa;
    j["beta"] = gt.beta;
    j["seed"] = gt.spec.seed;
    j["survey_rows"] = gt.spec.survey_rows;
    j["agency_rows"] = gt.spec.agency_rows;
    j["pop_size"] = gt.spec.pop_size;
    auto periods = nlohmann::json::array();
    for (const auto& p : gt.periods) {
        nlohmann::json shares;
        for (std::size_t c = 0; c < kNumChannels; ++c) shares[std::string(kChannels[c])] = p.channel_share[c];
        periods.push_back({{"period", p.period.to_string()},
                           {"indicator", p.indicator},
                           {"agency_rate", p.agency_rate},
                           {"acceptance", p.acceptance},
                           {"channel_share", shares}});
    }
    j["periods"] = std::move(periods);
    return j;
}

std::filesystem::path survey_file(const std::filesystem::path& dir, HalfYearPeriod p) {
    return dir / ("survey_" + p.to_string() + ".csv");
}

std::filesystem::path agency_file(const std::filesystem::path& dir, HalfYearPeriod p) {
    return dir / ("agency_" + p.to_string() + ".csv");
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "survey");
    fs::create_directories(dir / "agency");
    const auto open = [](const fs::path& p) {
        std::ofstream out(p);
        if (!out) throw Error("cannot write " + p.string());
        return out;
    };
    const auto merged = [](const SampleTable& a, const SampleTable& b) {
        // Interleave part-time rows deterministically: append, then stable
        // order is irrelevant for loading since they are filtered.
        SampleTable t = a;
        t.rows.insert(t.rows.end(), b.rows.begin(), b.rows.end());
        return t;
    };
    for (std::size_t i = 0; i < data.survey.size(); ++i) {
        auto out = open(survey_file(dir / "survey", data.survey[i].period));
        write_table(out, merged(data.survey[i], data.survey_part_time[i]));
    }
    for (std::size_t i = 0; i < data.agency.size(); ++i) {
        auto out = open(agency_file(dir / "agency", data.agency[i].period));
        write_table(out, merged(data.agency[i], data.agency_part_time[i]));
    }
    {
        auto out = open(dir / "counts.csv");
        write_counts(out, data.counts);
    }
    {
        auto out = open(dir / "aux.csv");
        write_aux(out, data.aux);
    }
    {
        auto out = open(dir / "indicators.csv");
        write_indicators(out, data.indicators);
    }
    {
        auto out = open(dir / "truth.json");
        out << truth_to_json(data.truth).dump(2) << '\n';
    }
    {
        auto out = open(dir / "spec.cfg");
        out << spec_to_text(data.truth.spec);
    }
}

// ---- key-value spec ----

namespace {

using Setter = std::function<void(PopulationSpec&, const std::string&)>;
using Getter = std::function<std::string(const PopulationSpec&)>;

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_vec(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(parse_double(trim(cell)));
    return out;
}

std::string vec_text(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += format_double(v[i]);
    }
    return s;
}

struct Key {
    Setter set;
    Getter get;
};

template <class T>
Key num_key(T PopulationSpec::*m) {
    return {[m](PopulationSpec& s, const std::string& v) {
                const double d = parse_double(v);
                if constexpr (std::is_integral_v<T>) {
                    if (d != std::floor(d)) throw Error("expected an integer, got '" + v + "'");
                }
                s.*m = static_cast<T>(d);
            },
            [m](const PopulationSpec& s) {
                if constexpr (std::is_integral_v<T>) return std::to_string(s.*m);
                else return format_double(s.*m);
            }};
}

Key vec_key(std::vector<double> PopulationSpec::*m) {
    return {[m](PopulationSpec& s, const std::string& v) { s.*m = parse_vec(v); },
            [m](const PopulationSpec& s) { return vec_text(s.*m); }};
}

const std::vector<std::pair<std::string, Key>>& keys() {
    static const std::vector<std::pair<std::string, Key>> k = {
        {"seed", {[](PopulationSpec& s, const std::string& v) { s.seed = std::stoull(v); },
                  [](const PopulationSpec& s) { return std::to_string(s.seed); }}},
        {"start", {[](PopulationSpec& s, const std::string& v) { s.start = HalfYearPeriod::parse(v); },
                   [](const PopulationSpec& s) { return s.start.to_string(); }}},
        {"periods", num_key(&PopulationSpec::periods)},
        {"survey_rows", num_key(&PopulationSpec::survey_rows)},
        {"agency_rows", num_key(&PopulationSpec::agency_rows)},
        {"part_time_rate", num_key(&PopulationSpec::part_time_rate)},
        {"pop_size", num_key(&PopulationSpec::pop_size)},
        {"channel_share", vec_key(&PopulationSpec::channel_share)},
        {"channel_trend", vec_key(&PopulationSpec::channel_trend)},
        {"channel_season", vec_key(&PopulationSpec::channel_season)},
        {"survey_oversample", vec_key(&PopulationSpec::survey_oversample)},
        {"channel_tilt", vec_key(&PopulationSpec::channel_tilt)},
        {"level_drift", num_key(&PopulationSpec::level_drift)},
        {"age_mean", num_key(&PopulationSpec::age_mean)},
        {"age_sd", num_key(&PopulationSpec::age_sd)},
        {"age_drift", num_key(&PopulationSpec::age_drift)},
        {"age_channel", vec_key(&PopulationSpec::age_channel)},
        {"label_cap", num_key(&PopulationSpec::label_cap)},
        {"label_intercept", num_key(&PopulationSpec::label_intercept)},
        {"label_trend", num_key(&PopulationSpec::label_trend)},
        {"label_age", num_key(&PopulationSpec::label_age)},
        {"label_gender", vec_key(&PopulationSpec::label_gender)},
        {"label_education", vec_key(&PopulationSpec::label_education)},
        {"label_size_before", vec_key(&PopulationSpec::label_size_before)},
        {"selection", {[](PopulationSpec& s, const std::string& v) {
                           if (v == "mcar") s.selection = Selection::mcar;
                           else if (v == "mar") s.selection = Selection::mar;
                           else if (v == "nmar") s.selection = Selection::nmar;
                           else throw Error("selection must be mcar, mar or nmar");
                       },
                       [](const PopulationSpec& s) { return to_string(s.selection); }}},
        {"mcar_p", num_key(&PopulationSpec::mcar_p)},
        {"mar_intercept", num_key(&PopulationSpec::mar_intercept)},
        {"mar_age", num_key(&PopulationSpec::mar_age)},
        {"mar_age_drift", num_key(&PopulationSpec::mar_age_drift)},
        {"mar_education", vec_key(&PopulationSpec::mar_education)},
        {"mar_size_before", vec_key(&PopulationSpec::mar_size_before)},
        {"kappa", num_key(&PopulationSpec::kappa)},
        {"agency_age_shift", num_key(&PopulationSpec::agency_age_shift)},
        {"aux_noise", num_key(&PopulationSpec::aux_noise)},
    };
    return k;
}

} // namespace

void set_spec_value(PopulationSpec& spec, const std::string& key, const std::string& value) {
    for (const auto& [name, k] : keys()) {
        if (name == key) {
            try {
                k.set(spec, trim(value));
            } catch (const std::exception& e) {
                throw Error("spec key '" + key + "': " + e.what());
            }
            return;
        }
    }
    throw Error("unknown spec key '" + key + "'");
}

PopulationSpec parse_spec(const std::string& text, const std::string& origin) {
    PopulationSpec spec;
    std::stringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(origin + ":" + std::to_string(line_no) + ": expected key = value");
        }
        try {
            set_spec_value(spec, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    spec.validate();
    return spec;
}

PopulationSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str(), path.string());
}

std::string spec_to_text(const PopulationSpec& spec) {
    std::string out;
    for (const auto& [name, k] : keys()) out += name + " = " + k.get(spec) + "\n";
    return out;
}

} // namespace nowcast
