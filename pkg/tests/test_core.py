import math

import numpy as np
import pytest

from ipdad.core import (
    BINARY,
    CONTINUOUS,
    AdStudy,
    EstimabilityError,
    InputError,
    IpdStudy,
    Partition,
    SeparationError,
    StudyCollection,
    StudyValidationError,
    expand_counts,
    load_ad,
    load_example,
    load_ipd,
    summarize_ipd,
    write_ad,
    write_ipd,
)
from conftest import continuous_collection


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_ipd_counts(tmp_path):
    p = write(tmp_path, "ipd.csv", "study_id,y,x\na,1.0,0\na,2.0,0\na,3.0,1\na,4.0,1\n")
    coll = load_ipd(p)
    st = coll.ipd["a"]
    assert st.n == 4 and st.n_t == 2 and st.pi == 0.5


def test_single_arm_rejected(tmp_path):
    p = write(tmp_path, "ipd.csv", "study_id,y,x\na,1,1\na,2,1\nb,1,0\nb,2,1\n")
    with pytest.raises(StudyValidationError, match="single-arm study") as e:
        load_ipd(p)
    assert e.value.study_id == "a"


def test_ipd_errors(tmp_path):
    with pytest.raises(InputError, match="missing"):
        load_ipd(write(tmp_path, "a.csv", "study_id,y\na,1\n"))
    with pytest.raises(InputError, match="non-numeric"):
        load_ipd(write(tmp_path, "b.csv", "study_id,y,x\na,abc,0\na,1,1\n"))
    with pytest.raises(InputError):
        load_ipd(write(tmp_path, "c.csv", "study_id,y,x\na,0.5,0\na,1,1\n"), BINARY)
    with pytest.raises(InputError):
        IpdStudy("a", [1.0], [1.0])


def test_load_ad(tmp_path):
    coll = load_ad(write(tmp_path, "ad.csv", "study_id,beta_hat,var_hat,n_t,n_c\ns1,0.5,0.04,25,25\n"))
    assert coll.ad["s1"].pi == 0.5
    with pytest.raises(InputError, match="var_hat"):
        load_ad(write(tmp_path, "b.csv", "study_id,beta_hat,var_hat,n_t,n_c\ns1,0.5,-0.1,25,25\n"))
    with pytest.raises(InputError, match="duplicate"):
        load_ad(write(tmp_path, "c.csv", "study_id,beta_hat,var_hat,n_t,n_c\ns1,0.5,1,2,2\ns1,0.5,1,2,2\n"))
    with pytest.raises(InputError):
        load_ad(write(tmp_path, "d.csv", "study_id,beta_hat,var_hat,n_t,n_c\ns1,0.5,1,2\n"))


def test_beta_blocker_file():
    coll = load_example("beta_blockers")
    assert coll.k == 22
    sizes = [a.n for a in coll.all_ad()]
    assert min(sizes) == 77 and max(sizes) == 3837
    assert all(a.has_cases for a in coll.all_ad())


def test_partition_and_collection():
    with pytest.raises(InputError):
        Partition({"a"}, {"a"})
    p = Partition.from_ipd(["a", "b", "c"], ["b"])
    assert p.k1 == 1 and p.k2 == 2
    ad = AdStudy("a", 0.1, 0.2, 3, 4)
    with pytest.raises(InputError):
        StudyCollection(ipd={"a": IpdStudy("a", [1, 2], [0, 1])}, ad={"a": ad})


def test_summarize_continuous():
    st = IpdStudy("a", [0.0, 1.0, 1.5, 2.5], [0, 0, 1, 1])
    ad = summarize_ipd(st)
    assert ad.beta_hat == pytest.approx(2.0 - 0.5)
    s2 = (0.25 + 0.25 + 0.25 + 0.25) / 2
    assert ad.var_hat == pytest.approx(s2 / (4 * 0.25))


def test_summarize_matches_independent(rng):
    for _ in range(20):
        n = int(rng.integers(3, 30))
        n_t = int(rng.integers(1, n))
        x = np.r_[np.ones(n_t), np.zeros(n - n_t)]
        y = rng.normal(size=n)
        ad = summarize_ipd(IpdStudy("s", y, x))
        resid = np.r_[y[:n_t] - y[:n_t].mean(), y[n_t:] - y[n_t:].mean()]
        s2 = resid @ resid / (n - 2)
        assert ad.var_hat == pytest.approx(s2 / (n * (n_t / n) * (1 - n_t / n)), rel=1e-12)


def test_summarize_permutation_invariant(rng):
    y = rng.normal(size=15)
    x = np.r_[np.ones(6), np.zeros(9)]
    perm = rng.permutation(15)
    a = summarize_ipd(IpdStudy("s", y, x))
    b = summarize_ipd(IpdStudy("s", y[perm], x[perm]))
    assert a == b


def test_summarize_binary():
    st = expand_counts("s", 10, 5, 20, 20)
    ad = summarize_ipd(st)
    assert ad.beta_hat == pytest.approx(math.log(3), abs=1e-10)
    assert (ad.cases_t, ad.cases_c) == (10, 5)
    with pytest.raises(SeparationError):
        summarize_ipd(expand_counts("s", 0, 5, 20, 20))


def test_summarize_degenerate_continuous():
    with pytest.raises(EstimabilityError):
        summarize_ipd(IpdStudy("s", [1.0, 2.0], [0, 1]))


def test_round_trip(tmp_path, rng):
    coll = continuous_collection(rng)
    write_ipd(coll, tmp_path / "ipd.csv")
    again = load_ipd(tmp_path / "ipd.csv", CONTINUOUS)
    assert again.order == coll.order
    for s in coll.order:
        assert np.array_equal(again.ipd[s].responses, coll.ipd[s].responses)
        assert np.array_equal(again.ipd[s].treatment, coll.ipd[s].treatment)
    ads = StudyCollection(ad={s: summarize_ipd(coll.ipd[s]) for s in coll.order}, order=coll.order)
    write_ad(ads, tmp_path / "ad.csv")
    back = load_ad(tmp_path / "ad.csv")
    assert [back.ad[s] for s in back.order] == [ads.ad[s] for s in ads.order]


def test_round_trip_cases(tmp_path):
    coll = load_example()
    write_ad(coll, tmp_path / "bb.csv")
    assert load_ad(tmp_path / "bb.csv", BINARY).ad == coll.ad


def test_immutable():
    st = IpdStudy("a", [1.0, 2.0], [0, 1])
    with pytest.raises(ValueError):
        st.responses[0] = 5.0
