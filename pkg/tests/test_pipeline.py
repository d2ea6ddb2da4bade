"""Preprocessing pipeline: stage outputs and the full chain."""

import pytest

from workbench.pipeline import (
    KINDS,
    PipelineConfig,
    default_config,
    keeps_compound,
    normalize,
    pipeline_fingerprint,
    preprocess,
    remove_stopwords,
    split_camel,
    tokenize,
)
from workbench.porter import stem

# Published reference pairs for the classic stemming algorithm, full
# pipeline output (all steps applied).
STEM_PAIRS = [
    # plurals / -ed / -ing
    ("caresses", "caress"), ("ponies", "poni"), ("ties", "ti"),
    ("caress", "caress"), ("cats", "cat"),
    ("feed", "feed"), ("agreed", "agre"), ("plastered", "plaster"),
    ("bled", "bled"), ("motoring", "motor"), ("sing", "sing"),
    ("conflated", "conflat"), ("troubled", "troubl"), ("sized", "size"),
    ("hopping", "hop"), ("tanned", "tan"), ("falling", "fall"),
    ("hissing", "hiss"), ("fizzed", "fizz"), ("failing", "fail"),
    ("filing", "file"),
    ("happy", "happi"), ("sky", "sky"),
    # double-suffix reductions
    ("relational", "relat"), ("conditional", "condit"), ("rational", "ration"),
    ("valenci", "valenc"), ("hesitanci", "hesit"), ("digitizer", "digit"),
    ("conformabli", "conform"), ("radicalli", "radic"), ("differentli", "differ"),
    ("vileli", "vile"), ("analogousli", "analog"), ("vietnamization", "vietnam"),
    ("predication", "predic"), ("operator", "oper"), ("feudalism", "feudal"),
    ("decisiveness", "decis"), ("hopefulness", "hope"), ("callousness", "callous"),
    ("formaliti", "formal"), ("sensitiviti", "sensit"), ("sensibiliti", "sensibl"),
    ("triplicate", "triplic"), ("formative", "form"), ("formalize", "formal"),
    ("electriciti", "electr"), ("electrical", "electr"), ("hopeful", "hope"),
    ("goodness", "good"),
    # -al / -ance / -ence / ... removals
    ("revival", "reviv"), ("allowance", "allow"), ("inference", "infer"),
    ("airliner", "airlin"), ("gyroscopic", "gyroscop"), ("adjustable", "adjust"),
    ("defensible", "defens"), ("irritant", "irrit"), ("replacement", "replac"),
    ("adjustment", "adjust"), ("dependent", "depend"), ("adoption", "adopt"),
    ("homologou", "homolog"), ("communism", "commun"), ("activate", "activ"),
    ("angulariti", "angular"), ("homologous", "homolog"), ("effective", "effect"),
    ("bowdlerize", "bowdler"),
    # final-e and double-l cleanup
    ("probate", "probat"), ("rate", "rate"), ("cease", "ceas"),
    ("controll", "control"), ("roll", "roll"),
]


@pytest.mark.parametrize("word,expected", STEM_PAIRS)
def test_stem_reference_pairs(word, expected):
    assert stem(word) == expected


def test_stem_domain_words():
    assert stem("computes") == "comput"
    assert stem("computed") == "comput"
    assert stem("recorder") == "record"
    assert stem("a") == "a"  # length-1 fixed point


def test_tokenize():
    assert tokenize("image gallery app") == ["image", "gallery", "app"]
    assert tokenize("ffmpeg-based!") == ["ffmpeg", "based"]
    assert tokenize("") == []
    assert tokenize("a_b.c,d") == ["a", "b", "c", "d"]
    # non-ASCII characters are dropped before splitting
    assert tokenize("café résumé") == ["caf", "rsum"]


def test_split_camel():
    assert split_camel("TerminalFactory", keep_compound=True) == [
        "TerminalFactory", "Terminal", "Factory",
    ]
    assert split_camel("TerminalFactory") == ["Terminal", "Factory"]
    assert split_camel("XMLParser") == ["XML", "Parser"]
    assert split_camel("video") == ["video"]
    # single-part tokens never get a duplicate compound
    assert split_camel("video", keep_compound=True) == ["video"]
    assert split_camel("parseHTTPResponse") == ["parse", "HTTP", "Response"]


def test_normalize():
    assert normalize(["E4Application"]) == ["eapplication"]
    assert normalize(["MP3"]) == ["mp"]
    assert normalize(["Video"]) == ["video"]
    assert normalize(["42"]) == []  # all-digit tokens vanish
    assert normalize([]) == []


def test_remove_stopwords(pipe_cfg):
    assert remove_stopwords(["the", "void", "player"], pipe_cfg) == ["player"]
    assert remove_stopwords(["public", "static"], pipe_cfg) == []
    assert remove_stopwords([], pipe_cfg) == []


def test_stopword_lists_cover_both_languages(pipe_cfg):
    for kw in ("void", "public", "while", "static", "class", "return"):
        assert kw in pipe_cfg.java_stopwords
    for w in ("the", "a", "is", "and"):
        assert w in pipe_cfg.english_stopwords


def test_keeps_compound_policy(pipe_cfg):
    assert not keeps_compound("description", pipe_cfg)
    assert not keeps_compound("readme", pipe_cfg)
    for kind in ("method_class", "import_package", "api", "source_file",
                 "bug_report", "api_description"):
        assert keeps_compound(kind, pipe_cfg)
    with pytest.raises(ValueError):
        keeps_compound("no-such-kind", pipe_cfg)


def test_preprocess_text_kind(pipe_cfg):
    assert preprocess("Android photo viewer", "description", pipe_cfg) == [
        "android", "photo", "viewer",
    ]
    assert preprocess("Android video recorder", "description", pipe_cfg) == [
        "android", "video", "record",
    ]
    assert preprocess("", "description", pipe_cfg) == []


def test_preprocess_code_kind(pipe_cfg):
    assert preprocess("copyFile()", "method_class", pipe_cfg) == [
        "copyfil", "copi", "file",
    ]
    # identifier quoted in a bug report: compound kept, digits stripped
    assert preprocess("E4Application", "bug_report", pipe_cfg) == [
        "eapplic", "e", "applic",
    ]


def test_preprocess_removes_java_keywords(pipe_cfg):
    assert preprocess("public void copyFile", "method_class", pipe_cfg) == [
        "copyfil", "copi", "file",
    ]


def test_preprocess_deterministic(pipe_cfg):
    text = "TerminalFactory creates terminals for the SSH2 sessions"
    assert (
        preprocess(text, "method_class", pipe_cfg)
        == preprocess(text, "method_class", pipe_cfg)
    )


def test_stopwords_matched_on_surface_forms(pipe_cfg):
    # 'this' is a keyword stopword; 'thistle' must survive and stem freely
    out = preprocess("this thistle", "description", pipe_cfg)
    assert "thistl" in out and "this" not in out


def test_kinds_tuple_stable():
    assert KINDS == (
        "description", "readme", "method_class", "import_package", "api",
        "source_file", "bug_report", "api_description",
    )


def test_fingerprint_tracks_config(pipe_cfg):
    base = pipeline_fingerprint(pipe_cfg)
    assert base == pipeline_fingerprint(default_config())
    altered = PipelineConfig(
        english_stopwords=pipe_cfg.english_stopwords | {"zzz"},
        java_stopwords=pipe_cfg.java_stopwords,
    )
    assert pipeline_fingerprint(altered) != base
    no_compound = PipelineConfig(
        english_stopwords=pipe_cfg.english_stopwords,
        java_stopwords=pipe_cfg.java_stopwords,
        keep_compound_for_code=False,
    )
    assert pipeline_fingerprint(no_compound) != base
