#pragma once

// Built-in synthetic dialog world: slot-filled templates over eight everyday
// topics plus a paraphrase grammar rich enough that a typical response has
// well over four paraphrases.

#include "smrt/corpus.hpp"
#include "smrt/grammar.hpp"

namespace smrt {

inline ParaphraseGrammar default_grammar() {
  ParaphraseGrammar g;
  g.add_synonym_class({"like", "enjoy", "love"});
  g.add_synonym_class({"great", "nice", "fine", "lovely"});
  g.add_synonym_class({"think", "believe", "guess"});
  g.add_synonym_class({"want", "fancy"});
  g.add_synonym_class({"yes", "sure", "yeah"});
  g.add_synonym_class({"visited", "toured"});
  g.add_synonym_class({"easier", "simpler"});
  g.add_prefix({"oh"});
  g.add_prefix({"well"});
  g.add_prefix({"hmm"});
  g.add_suffix({"honestly"});
  g.add_suffix({"indeed"});
  return g;
}

inline TemplateSet default_templates() {
  TemplateSet t;
  t.slots["food"] = {"pizza", "pasta", "sushi", "curry", "tacos", "soup", "salad", "rice",
                     "noodles", "bread", "cake", "tea", "coffee", "juice", "stew", "pie"};
  t.slots["food2"] = t.slots["food"];
  t.slots["place"] = {"paris", "tokyo", "rome",   "cairo",  "sydney", "oslo",
                      "lima",  "madrid", "berlin", "dublin", "quito",  "hanoi"};
  t.slots["place2"] = t.slots["place"];
  t.slots["sport"] = {"soccer", "tennis", "golf", "hockey", "cricket", "rugby", "swimming",
                      "cycling"};
  t.slots["sport2"] = t.slots["sport"];
  t.slots["instrument"] = {"guitar", "piano", "violin", "drums", "flute", "cello", "trumpet"};
  t.slots["instrument2"] = t.slots["instrument"];
  t.slots["animal"] = {"cat", "dog", "bird", "fish", "rabbit", "turtle", "hamster", "pony"};
  t.slots["animal2"] = t.slots["animal"];
  t.slots["weather"] = {"sunny", "rainy", "windy", "cloudy", "snowy", "foggy", "stormy", "humid"};
  t.slots["weather2"] = t.slots["weather"];
  t.slots["job"] = {"teacher", "doctor", "farmer", "writer", "painter", "pilot", "chef",
                    "nurse", "singer", "baker"};
  t.slots["job2"] = t.slots["job"];
  t.slots["day"] = {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
  t.slots["day2"] = t.slots["day"];

  auto add = [&t](const char* topic, const char* p, const char* r) {
    t.templates.push_back({topic, p, r});
  };
  add("food", "do you like <food> or <food2>", "i like <food> more");
  add("food", "should we cook <food> on <day>", "yes i want <food> on <day>");
  add("food", "is <food> better than <food2>", "i think <food> is great");
  add("food", "do you eat <food> in <place>", "yes i enjoy <food> there");
  add("food", "can we get <food> after <sport>", "yes <food> sounds great");
  add("travel", "have you been to <place> or <place2>", "i visited <place> last year");
  add("travel", "should we fly to <place> on <day>", "yes <place> sounds great");
  add("travel", "is <place> nicer than <place2>", "i believe <place> is nice");
  add("sports", "do you play <sport> or <sport2>", "i like <sport> more");
  add("sports", "should we watch <sport> on <day>", "sure i enjoy <sport>");
  add("sports", "did you play <sport> in <place>", "yes i played <sport> there");
  add("music", "can you play the <instrument> or the <instrument2>", "i play the <instrument> a bit");
  add("music", "should i learn the <instrument> or the <instrument2>",
      "i think the <instrument> is great");
  add("pets", "would you get a <animal> or a <animal2>", "i want a <animal> someday");
  add("pets", "is a <animal> easier than a <animal2>", "i guess a <animal> is easier");
  add("weather", "will it be <weather> or <weather2> tomorrow", "it will be <weather> i think");
  add("weather", "was it <weather> in <place>", "yes it was <weather> there");
  add("work", "is your friend a <job> or a <job2>", "she is a <job> now");
  add("work", "should i become a <job> or a <job2>", "i think a <job> is a fine job");
  add("work", "does a <job> like <food>", "sure a <job> likes <food>");
  add("plans", "are you free on <day> or <day2>", "i am free on <day>");
  add("plans", "should we meet on <day> in <place>", "sure <day> in <place> works");
  return t;
}

}  // namespace smrt
