//! Reference vocabulary for the Porter stemmer, frozen from the reference
//! implementation's output.

use logmap_core::stem::porter_stem;

const VOCAB: &[(&str, &str)] = &[
    ("caresses", "caress"),
    ("ponies", "poni"),
    ("ties", "ti"),
    ("caress", "caress"),
    ("cats", "cat"),
    ("feed", "feed"),
    ("agreed", "agre"),
    ("plastered", "plaster"),
    ("bled", "bled"),
    ("motoring", "motor"),
    ("sing", "sing"),
    ("conflated", "conflat"),
    ("troubled", "troubl"),
    ("sized", "size"),
    ("hopping", "hop"),
    ("tanned", "tan"),
    ("falling", "fall"),
    ("hissing", "hiss"),
    ("fizzed", "fizz"),
    ("failing", "fail"),
    ("filing", "file"),
    ("happy", "happi"),
    ("sky", "sky"),
    ("relational", "relat"),
    ("conditional", "condit"),
    ("rational", "ration"),
    ("valenci", "valenc"),
    ("hesitanci", "hesit"),
    ("digitizer", "digit"),
    ("conformabli", "conform"),
    ("radicalli", "radic"),
    ("differentli", "differ"),
    ("vileli", "vile"),
    ("analogousli", "analog"),
    ("vietnamization", "vietnam"),
    ("predication", "predic"),
    ("operator", "oper"),
    ("feudalism", "feudal"),
    ("decisiveness", "decis"),
    ("hopefulness", "hope"),
    ("callousness", "callous"),
    ("formaliti", "formal"),
    ("sensitiviti", "sensit"),
    ("sensibiliti", "sensibl"),
    ("triplicate", "triplic"),
    ("formative", "form"),
    ("formalize", "formal"),
    ("electriciti", "electr"),
    ("electrical", "electr"),
    ("hopeful", "hope"),
    ("goodness", "good"),
    ("revival", "reviv"),
    ("allowance", "allow"),
    ("inference", "infer"),
    ("airliner", "airlin"),
    ("gyroscopic", "gyroscop"),
    ("adjustable", "adjust"),
    ("defensible", "defens"),
    ("irritant", "irrit"),
    ("replacement", "replac"),
    ("adjustment", "adjust"),
    ("dependent", "depend"),
    ("adoption", "adopt"),
    ("homologou", "homolog"),
    ("communism", "commun"),
    ("activate", "activ"),
    ("angulariti", "angular"),
    ("homologous", "homolog"),
    ("effective", "effect"),
    ("bowdlerize", "bowdler"),
    ("probate", "probat"),
    ("rate", "rate"),
    ("cease", "ceas"),
    ("controll", "control"),
    ("roll", "roll"),
    ("generalizations", "gener"),
    ("oscillators", "oscil"),
    ("abilities", "abil"),
    ("archaeology", "archaeolog"),
    ("analogies", "analog"),
    ("restaurant", "restaur"),
    ("businesses", "busi"),
    ("business", "busi"),
    ("papers", "paper"),
    ("publications", "public"),
    ("journals", "journal"),
    ("conferences", "confer"),
    ("authors", "author"),
    ("organizations", "organ"),
    ("keywords", "keyword"),
    ("domains", "domain"),
    ("databases", "databas"),
    ("professors", "professor"),
    ("reviews", "review"),
    ("tips", "tip"),
    ("users", "user"),
    ("stars", "star"),
    ("names", "name"),
    ("cities", "citi"),
    ("neighbourhoods", "neighbourhood"),
    ("categories", "categori"),
    ("checkins", "checkin"),
    ("years", "year"),
    ("titles", "titl"),
    ("writes", "write"),
    ("university", "univers"),
    ("universities", "univers"),
    ("running", "run"),
    ("runs", "run"),
    ("ran", "ran"),
    ("easily", "easili"),
    ("fairly", "fairli"),
    ("generously", "gener"),
    ("agreement", "agreement"),
    ("meeting", "meet"),
    ("meetings", "meet"),
    ("crying", "cry"),
    ("cried", "cri"),
    ("enjoyment", "enjoy"),
    ("relativity", "rel"),
    ("quickly", "quickli"),
    ("national", "nation"),
    ("nationality", "nation"),
];

#[test]
fn matches_reference_vocabulary() {
    let mismatches: Vec<_> = VOCAB
        .iter()
        .filter(|(word, stem)| porter_stem(word) != *stem)
        .map(|(word, stem)| format!("{word}: expected {stem}, got {}", porter_stem(word)))
        .collect();
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}

#[test]
fn stemming_is_deterministic() {
    for (word, _) in VOCAB {
        assert_eq!(porter_stem(word), porter_stem(word));
    }
}
