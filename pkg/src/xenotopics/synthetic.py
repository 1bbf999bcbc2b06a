"""Synthetic corpora with known structure, for checks and demos."""

from __future__ import annotations

import datetime as dt

import numpy as np

from xenotopics.corpus import DEFAULT_HASHTAGS, DEFAULT_WINDOWS, CategoryLabel, TweetRecord


def planted_topics(K: int = 5, V: int = 50, background: float = 0.1, seed: int = 0) -> np.ndarray:
    """Topic-word matrix where each topic owns a block of ``V // K`` words.

    Block membership is a random permutation of the vocabulary; within a block
    the weights are Dirichlet(1); ``background`` of each topic's mass is spread
    uniformly over all words.
    """
    rng = np.random.default_rng(seed)
    block = V // K
    perm = rng.permutation(V)
    phi = np.zeros((K, V))
    for k in range(K):
        phi[k, perm[k * block:(k + 1) * block]] = rng.dirichlet(np.ones(block))
    return (1.0 - background) * phi + background / V


def planted_corpus(K: int = 5, V: int = 50, D: int = 500, doc_len: int = 100, alpha: float = 0.1,
                   background: float = 0.1, seed: int = 0):
    """Draw documents from the LDA generative process with planted topics.

    Returns ``(phi, theta, docs)`` with docs as lists of word ids.
    """
    rng = np.random.default_rng(seed)
    phi = planted_topics(K, V, background, seed=int(rng.integers(2**31)))
    theta = rng.dirichlet(np.full(K, alpha), size=D)
    docs = []
    for d in range(D):
        z = rng.choice(K, size=doc_len, p=theta[d])
        counts = np.bincount(z, minlength=K)
        words = np.concatenate([rng.choice(V, size=c, p=phi[k]) for k, c in enumerate(counts)])
        rng.shuffle(words)
        docs.append(words.tolist())
    return phi, theta, docs


def align_topics(estimated: np.ndarray, truth: np.ndarray):
    """Greedy one-to-one matching by total-variation distance.

    Returns ``(pairs, distances)`` with pairs as (estimated row, true row).
    """
    tv = 0.5 * np.abs(estimated[:, None, :] - truth[None, :, :]).sum(axis=2)
    pairs, dists = [], []
    used_e, used_t = set(), set()
    for flat in np.argsort(tv, axis=None, kind="stable"):
        i, j = np.unravel_index(flat, tv.shape)
        if i in used_e or j in used_t:
            continue
        used_e.add(i)
        used_t.add(j)
        pairs.append((int(i), int(j)))
        dists.append(float(tv[i, j]))
    return pairs, np.array(dists)


def separable_examples(per_class: int = 500, signature: int = 20, shared: int = 30, length: int = 12,
                       seed: int = 0) -> list:
    """Five classes, each with its own disjoint signature vocabulary plus shared filler words.

    Every document carries at least three signature words of its class.
    """
    from xenotopics.classifier import LabeledExample

    rng = np.random.default_rng(seed)
    filler = [f"common{i}" for i in range(shared)]
    out = []
    for c in CategoryLabel:
        sig = [f"{c.label_name}{i}" for i in range(signature)]
        for n in range(per_class):
            k = int(rng.integers(3, length))
            words = list(rng.choice(sig, size=k)) + list(rng.choice(filler, size=length - k))
            rng.shuffle(words)
            out.append(LabeledExample(f"{c.label_name}-{n}", " ".join(words), c))
    return out


# themed word pools per category; each pool splits into several sub-themes
THEMES = {
    CategoryLabel.STIGMATIZATION: [
        "virus spread infection outbreak disease sick contagious carrier germ plague",
        "bat soup market wet animal eat wildlife meat dirty exotic",
        "mask cough fever symptom hospital patient quarantine isolate test positive",
        "travel flight airport tourist border passenger arrive cruise visitor trip",
        "wuhan city province lab origin source ground zero epicenter region",
        "death toll case number report confirm rise count daily figure",
    ],
    CategoryLabel.OFFENSIVENESS: [
        "ccp regime communist party dictator authoritarian tyranny control state propaganda",
        "hongkong protest democracy freedom police crackdown student rally march umbrella",
        "uyghur camp genocide detention human right abuse minority prison torture",
        "taiwan independence island sovereignty strait navy threat military invade claim",
        "censorship silence journalist doctor whistleblower arrest speech disappear media truth",
        "shame disgust hate evil monster enemy filthy rotten scum vile",
    ],
    CategoryLabel.BLAME: [
        "lie coverup deceit hide conceal secret truth deny mislead fake",
        "government responsible accountable fault negligence failure blame official leader incompetent",
        "who tedros organization complicit praise delay warning guideline advice official",
        "pay compensation reparation debt sue lawsuit damage owe bill fine",
        "trump president america american administration white house briefing press medium",
        "early january warn ignore delay week month report data timeline",
    ],
    CategoryLabel.EXCLUSION: [
        "boycott product buy ban import goods brand shop store purchase",
        "trade tariff economy supply chain factory manufacture export deal market",
        "border close shut entry visa deport restrict immigration stop block",
        "india indian app tiktok ban alternative local swadeshi self reliant",
        "student worker leave expel kick out banish remove send exclude",
        "company business invest decouple relocate move production plant shift exit",
    ],
    CategoryLabel.NONE: [
        "stay home safe wash hand health care nurse thank frontline",
        "news update today live watch read story article share follow",
        "family friend love support community help neighbor kind together hope",
        "vaccine research science study trial doctor expert cure treatment data",
        "work school online lockdown remote class zoom job office closed",
        "weather sunday weekend music game movie food cook recipe fun",
    ],
}


def synthetic_tweets(per_cell: int = 40, words_per_tweet: int = 12, labeled_fraction: float = 1.0,
                     seed: int = 0) -> list:
    """Tweet records spread over all five categories and three stages.

    Each tweet draws most words from one or two sub-themes of its category
    and carries a hashtag from the default list, a mention or URL now and
    then, and a few stopwords. ``labeled_fraction`` of records keep their
    gold label.
    """
    rng = np.random.default_rng(seed)
    tags = sorted(DEFAULT_HASHTAGS)
    fillers = ["the", "is", "and", "this", "of", "to", "they", "are", "so", "just"]
    records = []
    for category, pools in THEMES.items():
        pools = [p.split() for p in pools]
        for window in DEFAULT_WINDOWS:
            span = (window.end - window.start).days
            for n in range(per_cell):
                primary = pools[int(rng.integers(len(pools)))]
                secondary = pools[int(rng.integers(len(pools)))]
                k = int(rng.integers(words_per_tweet // 2, words_per_tweet))
                words = list(rng.choice(primary, size=k)) + list(rng.choice(secondary, size=words_per_tweet - k))
                words += list(rng.choice(fillers, size=3))
                rng.shuffle(words)
                if rng.random() < 0.3:
                    words.insert(0, f"@user{int(rng.integers(1000))}")
                if rng.random() < 0.3:
                    words.append(f"https://t.co/{int(rng.integers(10**6)):06d}")
                tag = tags[int(rng.integers(len(tags)))]
                words.append(f"#{tag}")
                text = " ".join(words) + ("!" if rng.random() < 0.5 else ".")
                day = window.start + dt.timedelta(days=int(rng.integers(span + 1)))
                gold = category if rng.random() < labeled_fraction else None
                records.append(TweetRecord(f"{category.label_name[:3]}-{window.stage.value}-{n}", day, text,
                                           frozenset([tag]), gold))
    order = rng.permutation(len(records))
    return [records[i] for i in order]
