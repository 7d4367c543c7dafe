import io
import json
import math

import numpy as np
import pytest

from emolink.errors import ConfigError
from emolink.lexicon import DIMS, EmotionDim
from emolink.synth import PlantedPair, SynthSpec, generate_posts, synth_spec_from_dict

from oracles import chi2_2x2

CHI2_CRIT_P001_DF1 = 10.828  # upper 0.1% point of chi-square with 1 df


def spec(**kwargs):
    base = dict(
        posts=4000,
        words_per_dim={d: 5 for d in DIMS},
        baseline={d: 0.05 for d in DIMS},
        planted=(),
        seed=123,
    )
    base.update(kwargs)
    return SynthSpec(**base)


def presence_sets(s):
    fh = io.StringIO()
    generate_posts(s, fh)
    out = []
    for line in fh.getvalue().splitlines():
        rec = json.loads(line)
        out.append(set(rec["text"].split()) if rec["text"] else set())
    return out


class TestSpecValidation:
    def test_bad_probability(self):
        with pytest.raises(ConfigError, match="baseline"):
            spec(baseline={d: 1.5 for d in DIMS})

    def test_bad_planted_rate(self):
        with pytest.raises(ConfigError, match="planted rate"):
            spec(planted=(PlantedPair("tension00", "anger00", -0.1),))

    def test_planted_word_must_exist(self):
        with pytest.raises(ConfigError, match="undeclared word"):
            spec(planted=(PlantedPair("tension99", "anger00", 0.1),))

    def test_from_dict_defaults(self):
        s = synth_spec_from_dict({"posts": 10, "seed": 1})
        assert s.posts == 10
        assert s.words_per_dim[EmotionDim.ANGER] == 10

    def test_missing_required_field(self):
        with pytest.raises(ConfigError, match="posts"):
            synth_spec_from_dict({"seed": 1})


class TestGeneration:
    def test_same_seed_identical_output(self):
        a, b = io.StringIO(), io.StringIO()
        generate_posts(spec(), a)
        generate_posts(spec(), b)
        assert a.getvalue() == b.getvalue()

    def test_different_seed_differs(self):
        a, b = io.StringIO(), io.StringIO()
        generate_posts(spec(), a)
        generate_posts(spec(seed=124), b)
        assert a.getvalue() != b.getvalue()

    def test_lexicon_matches_generated_words(self):
        s = spec()
        lex = s.lexicon()
        for words in presence_sets(s)[:200]:
            assert words <= set(lex.words)

    def test_timestamps_evenly_spaced(self):
        fh = io.StringIO()
        generate_posts(spec(posts=3, spacing_seconds=60), fh)
        stamps = [json.loads(l)["created_at"] for l in fh.getvalue().splitlines()]
        assert stamps == ["2024-01-01T00:00:00Z", "2024-01-01T00:01:00Z", "2024-01-01T00:02:00Z"]

    def test_planted_joint_rate_within_3_se(self):
        rate = 0.05
        s = spec(posts=10000, planted=(PlantedPair("tension00", "anger00", rate),))
        joint = sum(
            1 for words in presence_sets(s) if {"tension00", "anger00"} <= words
        )
        n = s.posts
        observed = joint / n
        # the planted draw is ORed with the independent baseline, so the
        # target joint rate is rate + (1 - rate) * q^2
        q = 0.05
        target = rate + (1 - rate) * q * q
        se = math.sqrt(target * (1 - target) / n)
        assert abs(observed - target) <= 3 * se

    def test_unplanted_words_independent_chi_square(self):
        # with no planted pairs, co-occurrence should pass an independence
        # sanity check: chi-square below the 0.1% critical value for a
        # handful of word pairs (fixed seed keeps this deterministic)
        sets = presence_sets(spec(posts=6000))
        words = spec().words()
        pairs = [(words[i], words[i + 7]) for i in range(0, 20, 2)]
        for a, b in pairs:
            n11 = sum(1 for s_ in sets if a in s_ and b in s_)
            n10 = sum(1 for s_ in sets if a in s_ and b not in s_)
            n01 = sum(1 for s_ in sets if a not in s_ and b in s_)
            n00 = len(sets) - n11 - n10 - n01
            assert chi2_2x2(n11, n10, n01, n00) < CHI2_CRIT_P001_DF1

    def test_changing_one_planted_rate_leaves_other_pairs_untouched(self):
        planted = (
            PlantedPair("tension00", "anger00", 0.02),
            PlantedPair("vigor00", "vigor01", 0.03),
        )
        s1 = spec(planted=planted)
        s2 = spec(planted=(planted[0], PlantedPair("vigor00", "vigor01", 0.06)))
        sets1, sets2 = presence_sets(s1), presence_sets(s2)
        for w in ("tension00", "anger00", "depression00"):
            in1 = [w in row for row in sets1]
            in2 = [w in row for row in sets2]
            assert in1 == in2
