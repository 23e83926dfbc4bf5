#include "judge/guidelines.hpp"

namespace policysimp {

namespace {

const char* const kDefaultGuidelines = R"GUIDE([[preamble]]
You are an expert judge of English sentence simplification.

Materials. You receive a source sentence and several candidate simplifications numbered from 0. For every candidate you also receive a word alignment between the source and the candidate (lines of the form "source word <-> candidate word"; words without a line were not aligned) and constituency parse trees of the source and of every candidate. A parse shown as "(parse unavailable)" could not be produced; judge that sentence from its text alone.

Task. Compare the candidates along three dimensions and, for each dimension, choose the best candidate (preferred) and the worst candidate (dispreferred).
Lexical: how well difficult words and phrases were replaced by simpler ones. Use the word alignment to see which words were replaced, deleted, kept or added.
Structural: how well the sentence structure was made easier to follow. Use the parse trees to see splits, reordering and changed constructions.
Overall: which candidate is the simplest fluent sentence that still says what the source says.
A candidate that copies the source, drops essential information, changes the meaning or is ungrammatical should not be preferred on any dimension.

Score each edit with the principles below. ++ is a high reward, + a moderate reward, - a moderate penalty and -- a high penalty.
[[lexical]]
- replace (++): a difficult or rare word is replaced by a simpler, common word with the same meaning.
- replace (--): a replacement changes the meaning, is wrong in context, or is harder than the original.
- delete (+): a redundant or non-essential word is removed and no key information is lost.
- delete (--): a word that carries essential meaning is removed.
- keep (+): a word that is already simple is kept as it is.
- keep (-): a difficult word that has an obvious simpler alternative is kept.
- add (+): a short explanation makes a difficult concept easier to understand.
- add (-): added words are unnecessary, repetitive or change the meaning.
[[structural]]
- split (++): a long or complex sentence is split into shorter, complete sentences that keep the logic.
- split (-): a split produces fragments or breaks the connection between ideas.
- reorder (+): clauses or phrases are moved into a more natural, easier order.
- reorder (--): reordering changes who did what, or makes the sentence harder to follow.
- keep (+): a structure that is already simple is kept.
- keep (-): a complex structure such as heavy nesting, a long passive or a long relative clause is kept unchanged.
- replace (+): a complex construction is replaced by a simpler one, for example passive voice by active voice.
- replace (--): the new construction is ungrammatical or changes the meaning.
[[output_format]]
First explain your judgement briefly. Then finish your answer with exactly these three lines, where each <k> is a candidate number and the preferred and dispreferred candidates of a line are different:
Lexical: prefer <k>, disprefer <k>
Structural: prefer <k>, disprefer <k>
Overall: prefer <k>, disprefer <k>
[[instance]]
Source sentence:
{{source}}

Candidates:
{{candidates}}

Word alignments:
{{alignments}}

Parse trees:
{{parses}}
[[shot_input]]
Source sentence:
The lad was exhausted after the marathon.

Candidates:
Candidate 0: The boy was very tired after the marathon.
Candidate 1: The lad was exhausted after the marathon.
Candidate 2: The boy was exhausted after the long race.
Candidate 3: The boy ran a marathon. After, tired.

Word alignments:
Candidate 0 alignment:
the <-> the
lad <-> boy
was <-> was
exhausted <-> tired
after <-> after
the <-> the
marathon <-> marathon
. <-> .
Candidate 1 alignment:
the <-> the
lad <-> lad
was <-> was
exhausted <-> exhausted
after <-> after
the <-> the
marathon <-> marathon
. <-> .
Candidate 2 alignment:
the <-> the
lad <-> boy
was <-> was
exhausted <-> exhausted
after <-> after
the <-> the
marathon <-> race
. <-> .
Candidate 3 alignment:
the <-> the
lad <-> boy
marathon <-> marathon
after <-> after
exhausted <-> tired
. <-> .

Parse trees:
Source parse:
(ROOT (S (NP (DT The) (NN lad)) (VP (VBD was) (ADJP (JJ exhausted)) (PP (IN after) (NP (DT the) (NN marathon)))) (. .)))
Candidate 0 parse:
(ROOT (S (NP (DT The) (NN boy)) (VP (VBD was) (ADJP (RB very) (JJ tired)) (PP (IN after) (NP (DT the) (NN marathon)))) (. .)))
Candidate 1 parse:
(ROOT (S (NP (DT The) (NN lad)) (VP (VBD was) (ADJP (JJ exhausted)) (PP (IN after) (NP (DT the) (NN marathon)))) (. .)))
Candidate 2 parse:
(ROOT (S (NP (DT The) (NN boy)) (VP (VBD was) (ADJP (JJ exhausted)) (PP (IN after) (NP (DT the) (JJ long) (NN race)))) (. .)))
Candidate 3 parse:
(parse unavailable)
[[shot_verdict]]
Lexical: candidate 0 replaces "lad" with "boy" and "exhausted" with "very tired" (replace ++ twice). Candidate 1 copies the source and keeps both difficult words (keep -). Candidate 2 simplifies "lad" but keeps "exhausted" and swaps "marathon" for the vaguer "long race".
Structural: the source is already short. Candidates 0, 1 and 2 keep its simple structure (keep +). Candidate 3 splits it into a fragment, "After, tired." (split -).
Overall: candidate 0 is fluent, simple and faithful. Candidate 1 makes no change at all.
Lexical: prefer 0, disprefer 1
Structural: prefer 0, disprefer 3
Overall: prefer 0, disprefer 1
[[shot_input]]
Source sentence:
Numerous residents opposed the construction of the highway.

Candidates:
Candidate 0: Many people who live there were against building the highway.
Candidate 1: Numerous residents opposed the highway construction.
Candidate 2: Many residents opposed the building of the highway.
Candidate 3: Many residents opposed the highway. It was being built.

Word alignments:
Candidate 0 alignment:
numerous <-> many
residents <-> people
opposed <-> against
construction <-> building
the <-> the
highway <-> highway
. <-> .
Candidate 1 alignment:
numerous <-> numerous
residents <-> residents
opposed <-> opposed
the <-> the
construction <-> construction
highway <-> highway
. <-> .
Candidate 2 alignment:
numerous <-> many
residents <-> residents
opposed <-> opposed
the <-> the
construction <-> building
of <-> of
the <-> the
highway <-> highway
. <-> .
Candidate 3 alignment:
numerous <-> many
residents <-> residents
opposed <-> opposed
the <-> the
highway <-> highway
construction <-> built
. <-> .

Parse trees:
Source parse:
(ROOT (S (NP (JJ Numerous) (NNS residents)) (VP (VBD opposed) (NP (NP (DT the) (NN construction)) (PP (IN of) (NP (DT the) (NN highway))))) (. .)))
Candidate 0 parse:
(ROOT (S (NP (NP (JJ Many) (NNS people)) (SBAR (WHNP (WP who)) (S (VP (VBP live) (ADVP (RB there)))))) (VP (VBD were) (PP (IN against) (S (VP (VBG building) (NP (DT the) (NN highway)))))) (. .)))
Candidate 1 parse:
(ROOT (S (NP (JJ Numerous) (NNS residents)) (VP (VBD opposed) (NP (DT the) (NN highway) (NN construction))) (. .)))
Candidate 2 parse:
(ROOT (S (NP (JJ Many) (NNS residents)) (VP (VBD opposed) (NP (NP (DT the) (NN building)) (PP (IN of) (NP (DT the) (NN highway))))) (. .)))
Candidate 3 parse:
(ROOT (S (NP (JJ Many) (NNS residents)) (VP (VBD opposed) (NP (DT the) (NN highway))) (. .)) (S (NP (PRP It)) (VP (VBD was) (VP (VBG being) (VP (VBN built)))) (. .)))

[[shot_verdict]]
Lexical: candidate 2 replaces "numerous" and "construction" with common words and changes nothing else (replace ++). Candidate 0 also uses simple words but rewrites much more than the words. Candidate 1 keeps every difficult word (keep -).
Structural: candidate 2 keeps the simple structure (keep +). Candidate 0 adds a relative clause, which makes the sentence longer. Candidate 3 splits the sentence but the second part changes the meaning: the highway was not necessarily being built (split -).
Overall: candidate 0 is the easiest to read and keeps the meaning. Candidate 1 is hardly simplified.
Lexical: prefer 2, disprefer 1
Structural: prefer 2, disprefer 3
Overall: prefer 0, disprefer 1
[[shot_input]]
Source sentence:
The medication may induce drowsiness in some patients.

Candidates:
Candidate 0: The medicine may make some patients sleepy.
Candidate 1: The medication may cause sleepiness in some patients.
Candidate 2: The medicine will make all patients sleepy.
Candidate 3: Some patients. The medication may induce drowsiness.

Word alignments:
Candidate 0 alignment:
the <-> the
medication <-> medicine
may <-> may
induce <-> make
drowsiness <-> sleepy
some <-> some
patients <-> patients
. <-> .
Candidate 1 alignment:
the <-> the
medication <-> medication
may <-> may
induce <-> cause
drowsiness <-> sleepiness
in <-> in
some <-> some
patients <-> patients
. <-> .
Candidate 2 alignment:
the <-> the
medication <-> medicine
may <-> will
induce <-> make
drowsiness <-> sleepy
some <-> all
patients <-> patients
. <-> .
Candidate 3 alignment:
the <-> the
medication <-> medication
may <-> may
induce <-> induce
drowsiness <-> drowsiness
some <-> some
patients <-> patients
. <-> .

Parse trees:
Source parse:
(ROOT (S (NP (DT The) (NN medication)) (VP (MD may) (VP (VB induce) (NP (NN drowsiness)) (PP (IN in) (NP (DT some) (NNS patients))))) (. .)))
Candidate 0 parse:
(ROOT (S (NP (DT The) (NN medicine)) (VP (MD may) (VP (VB make) (S (NP (DT some) (NNS patients)) (ADJP (JJ sleepy))))) (. .)))
Candidate 1 parse:
(ROOT (S (NP (DT The) (NN medication)) (VP (MD may) (VP (VB cause) (NP (NN sleepiness)) (PP (IN in) (NP (DT some) (NNS patients))))) (. .)))
Candidate 2 parse:
(ROOT (S (NP (DT The) (NN medicine)) (VP (MD will) (VP (VB make) (S (NP (DT all) (NNS patients)) (ADJP (JJ sleepy))))) (. .)))
Candidate 3 parse:
(parse unavailable)
[[shot_verdict]]
Lexical: candidate 1 replaces "induce" and "drowsiness" with simpler words and keeps everything else (replace ++). Candidate 2 replaces "may" with "will" and "some" with "all", which changes the meaning (replace --).
Structural: candidate 0 uses the simple "make somebody sleepy" construction (replace +). Candidate 3 produces the fragment "Some patients." (split -).
Overall: candidate 0 is short, simple and faithful. Candidate 2 states something the source does not say.
Lexical: prefer 1, disprefer 2
Structural: prefer 0, disprefer 3
Overall: prefer 0, disprefer 2
)GUIDE";

}  // namespace

GuidelineTemplate default_guideline_template() {
  static const GuidelineTemplate t = parse_guideline_template(kDefaultGuidelines);
  return t;
}

}  // namespace policysimp
