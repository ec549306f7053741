#include "evl/synth.hpp"

#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "evl/rng.hpp"

namespace evl {

namespace {

using Words = std::vector<std::string>;

struct Topic {
  Words nouns;
  Words plurals;
  Words adjectives;
  Words verbs;       // base form
  Words past;        // past tense
  Words gerunds;
  Words entities;    // proper names
  Words places;      // prepositional phrases
  Words hashtags;    // without '#'
  Words emojis;
};

const std::vector<Topic>& topics() {
  static const std::vector<Topic> kTopics = {
      {  // sports
       {"game", "match", "team", "season", "goal", "coach", "final", "league", "crowd", "trade",
        "defense", "comeback"},
       {"games", "fans", "players", "tickets", "points", "goals", "teams"},
       {"great", "tough", "huge", "close", "crazy", "incredible", "big", "wild", "perfect"},
       {"watch", "play", "win", "miss", "cheer", "support", "follow"},
       {"watched", "won", "lost", "missed", "played", "scored", "finished"},
       {"watching", "playing", "cheering", "following"},
       {"Lakers", "Chiefs", "Rangers", "Celtics", "Arsenal", "Yankees", "Warriors", "Eagles"},
       {"at the stadium", "on the field", "at home", "in the arena", "on TV"},
       {"GameDay", "NBA", "SuperBowl", "sports", "NFL"},
       {"\U0001F3C0", "\U0001F3C8", "\U0001F3C6", "\U0001F525"}},
      {  // weather
       {"weather", "snow", "rain", "storm", "sunshine", "wind", "forecast", "morning", "sky",
        "cold", "heat"},
       {"clouds", "roads", "temperatures", "storms", "days"},
       {"cold", "sunny", "windy", "beautiful", "freezing", "warm", "grey", "strange", "lovely"},
       {"love", "hate", "enjoy", "expect", "need"},
       {"started", "stopped", "changed", "hit", "ruined", "cleared"},
       {"shoveling", "driving", "walking", "enjoying"},
       {"Denver", "Chicago", "Boston", "Seattle", "Omaha", "Lincoln", "Dallas"},
       {"outside", "in the city", "on the roads", "downtown", "across the state"},
       {"weather", "MorningWeather", "snow", "winter", "forecast"},
       {"\U0001F327", "\U0001F31E", "\U0001F32C", "\U0001F308"}},
      {  // music
       {"album", "song", "concert", "show", "tour", "band", "track", "playlist", "record",
        "stage", "single"},
       {"songs", "fans", "tickets", "shows", "lyrics"},
       {"new", "amazing", "beautiful", "loud", "favorite", "classic", "fresh", "perfect"},
       {"love", "hear", "play", "stream", "sing", "download"},
       {"released", "played", "heard", "dropped", "recorded", "announced"},
       {"listening to", "singing", "streaming", "playing"},
       {"Adele", "Coldplay", "Drake", "Madonna", "Metallica", "Shakira", "Beyonce"},
       {"at the theatre", "on stage", "in the studio", "on the radio", "at the club"},
       {"NewMusic", "music", "NowPlaying", "concert", "tour"},
       {"\U0001F3B5", "\U0001F3B8", "\U0001F3A4", "\U0001F3B6"}},
      {  // food
       {"coffee", "pizza", "dinner", "breakfast", "lunch", "recipe", "cake", "soup", "burger",
        "kitchen", "menu"},
       {"lemons", "cookies", "tacos", "snacks", "recipes", "drinks"},
       {"delicious", "fresh", "hot", "sweet", "spicy", "perfect", "tasty", "simple", "good"},
       {"cook", "eat", "try", "make", "bake", "order"},
       {"cooked", "ate", "tried", "made", "baked", "ordered"},
       {"cooking", "eating", "baking", "making"},
       {"Starbucks", "Chipotle", "Subway", "Nandos"},
       {"at home", "in the kitchen", "downtown", "at the market", "at work"},
       {"food", "foodie", "dinner", "recipe", "brunch"},
       {"\U0001F355", "\U0001F354", "\U0001F370", "\U0001F60B"}},
      {  // tech
       {"update", "phone", "app", "laptop", "software", "bug", "release", "feature", "code",
        "server", "network"},
       {"updates", "apps", "users", "devices", "features", "bugs"},
       {"new", "fast", "slow", "broken", "smart", "huge", "simple", "secure", "useful"},
       {"install", "fix", "build", "test", "launch", "try"},
       {"installed", "fixed", "built", "tested", "launched", "shipped"},
       {"coding", "testing", "building", "fixing"},
       {"Apple", "Google", "Microsoft", "Samsung", "Tesla", "Amazon"},
       {"in the cloud", "at work", "on my phone", "online", "in the office"},
       {"tech", "AI", "coding", "startup", "cloud"},
       {"\U0001F4BB", "\U0001F4F1", "\U0001F680", "\U0001F916"}},
      {  // travel
       {"trip", "flight", "hotel", "beach", "vacation", "airport", "road", "view", "plane",
        "journey", "weekend"},
       {"flights", "photos", "friends", "miles", "beaches", "views"},
       {"long", "amazing", "relaxing", "beautiful", "short", "busy", "quiet", "perfect"},
       {"visit", "book", "explore", "travel", "see", "pack"},
       {"visited", "booked", "explored", "landed", "saw", "packed"},
       {"traveling", "flying", "exploring", "packing"},
       {"Paris", "London", "Tokyo", "Rome", "Lisbon", "Miami", "Barcelona"},
       {"at the airport", "by the sea", "in the mountains", "abroad", "on the road"},
       {"travel", "vacation", "wanderlust", "TravelTuesday", "holiday"},
       {"\U0001F30D", "\U0001F3D6", "\U0001F334", "\U0001F305"}},
      {  // news
       {"election", "vote", "debate", "policy", "report", "bill", "campaign", "meeting", "court",
        "speech", "plan"},
       {"voters", "leaders", "reports", "results", "officials", "questions"},
       {"important", "official", "public", "local", "major", "final", "historic", "early"},
       {"vote", "read", "share", "support", "follow", "discuss"},
       {"announced", "signed", "passed", "said", "released", "confirmed"},
       {"reading", "voting", "discussing", "following"},
       {"Congress", "Senate", "Chancellor", "Mayor", "Governor", "Parliament"},
       {"in Washington", "in the city", "at the hall", "in court", "across the country"},
       {"news", "election", "politics", "breaking", "vote"},
       {"\U0001F4F0", "\U0001F5F3", "\U0001F4E2", "\U0001F914"}},
      {  // movies
       {"movie", "film", "series", "episode", "trailer", "show", "premiere", "cast", "ending",
        "sequel", "scene"},
       {"movies", "episodes", "films", "actors", "shows"},
       {"new", "scary", "funny", "great", "classic", "long", "weird", "perfect", "sad"},
       {"watch", "love", "see", "stream", "recommend", "review"},
       {"watched", "saw", "loved", "finished", "reviewed", "streamed"},
       {"watching", "streaming", "reviewing", "rewatching"},
       {"Netflix", "Disney", "Marvel", "Pixar", "HBO", "Hollywood"},
       {"at the cinema", "on Netflix", "at home", "on the couch", "in theaters"},
       {"movies", "film", "Oscars", "TV", "cinema"},
       {"\U0001F3AC", "\U0001F37F", "\U0001F3A5", "\U0001F602"}},
      {  // work and school
       {"meeting", "project", "deadline", "class", "exam", "office", "team", "interview",
        "homework", "presentation", "week"},
       {"emails", "students", "meetings", "notes", "deadlines", "classes"},
       {"long", "busy", "hard", "productive", "boring", "stressful", "big", "good"},
       {"finish", "start", "study", "write", "prepare", "submit"},
       {"finished", "started", "studied", "wrote", "prepared", "submitted"},
       {"studying", "working", "writing", "preparing"},
       {"Monday", "Friday", "Harvard", "Oxford", "Stanford"},
       {"at the office", "at school", "at home", "on campus", "in the library"},
       {"MondayMotivation", "work", "study", "college", "productivity"},
       {"\U0001F4DA", "\U0001F4BC", "\U0001F605", "\U0001F4AA"}},
      {  // health and fitness
       {"workout", "run", "gym", "yoga", "health", "sleep", "walk", "routine", "training",
        "race", "session"},
       {"miles", "steps", "weights", "goals", "friends", "muscles"},
       {"great", "hard", "early", "long", "healthy", "easy", "tough", "good", "strong"},
       {"run", "train", "lift", "stretch", "rest", "walk"},
       {"ran", "trained", "lifted", "finished", "walked", "completed"},
       {"running", "training", "lifting", "walking"},
       {"Boston", "Nike", "Peloton", "Central Park"},
       {"at the gym", "in the park", "before work", "outside", "at home"},
       {"fitness", "health", "running", "gym", "wellness"},
       {"\U0001F3C3", "\U0001F4AA", "\U0001F9D8", "\U0001F60A"}},
  };
  return kTopics;
}

const Words kOpeners = {"Just", "Finally", "Honestly", "So", "Wow", "Today", "Tonight", "Yesterday",
                        "Ok", "Well", "Really", "Still", "Again", "Oh", "Yes", "Sadly",
                        "Seriously", "Guess", "Remember", "Maybe"};
const Words kTimes = {"today", "tonight", "this weekend", "this morning", "right now",
                      "tomorrow", "last night", "this week", "again", "all day"};
const Words kFeelings = {"love it", "hate it", "need more", "feel great", "am tired",
                         "am so happy", "can not wait", "miss it"};
const Words kFirstNames = {"sarah", "mike", "anna", "james", "lisa", "tom", "kate", "alex",
                           "emma", "david", "chris", "nina", "paul", "laura", "sam", "maria"};
const Words kHandleSuffix = {"", "news", "official", "daily", "tv", "fan", "hq", "live",
                             "22", "99", "2020", "jr", "x", "pro", "real", "the"};
const Words kWeekdays = {"Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday",
                         "Sunday"};
const Words kGeneric = {"\U0001F602", "\U0001F60D", "\U0001F64F", "\U0001F440"};

const Words kForeign = {
    "Hoy es un gran dia para todos",  "Que bonito fin de semana",
    "Gracias por todo amigos",        "Heute ist ein schoner Tag",
    "Wir sehen uns morgen im Stadion", "Bonne journee a tous",
    "Quel match incroyable ce soir",  "Buongiorno a tutti voi",
};

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

class TweetWriter {
 public:
  explicit TweetWriter(Rng& rng) : rng_(rng) {}

  std::string handle() {
    return rng_.pick(kFirstNames) + rng_.pick(kHandleSuffix);
  }

  std::string tweet() {
    const Topic& t = rng_.pick(topics());
    std::string body = sentence(t);
    if (rng_.bernoulli(0.5)) body += " " + capitalize(sentence(t));
    if (rng_.bernoulli(0.6)) {
      body += " #" + rng_.pick(t.hashtags);
      if (rng_.bernoulli(0.3)) body += " #" + rng_.pick(t.hashtags);
    }
    if (rng_.bernoulli(0.4)) {
      body += " " + rng_.pick(t.emojis);
      if (rng_.bernoulli(0.25)) body += " " + (rng_.bernoulli(0.5) ? rng_.pick(t.emojis) : rng_.pick(kGeneric));
    }
    return body;
  }

  std::string foreign() { return rng_.pick(kForeign); }

 private:
  std::string end() {
    const double u = rng_.uniform();
    if (u < 0.45) return ".";
    if (u < 0.85) return "!";
    if (u < 0.93) return "!!";
    return "...";
  }

  std::string number() {
    static const Words kNums = {"2", "3", "5", "10", "20", "100", "2020", "7"};
    return rng_.pick(kNums);
  }

  std::string sentence(const Topic& t) {
    switch (rng_.below(16)) {
      case 0:
        return rng_.pick(kOpeners) + " " + rng_.pick(t.past) + " the " + rng_.pick(t.adjectives) +
               " " + rng_.pick(t.nouns) + " " + rng_.pick(kTimes) + end();
      case 1:
        return "Can't wait for the " + rng_.pick(t.nouns) + " " + rng_.pick(kTimes) + "!";
      case 2:
        return rng_.pick(t.entities) + " " + rng_.pick(t.past) + " the " + rng_.pick(t.nouns) +
               " " + rng_.pick(t.places) + end();
      case 3:
        return "Why is the " + rng_.pick(t.nouns) + " always so " + rng_.pick(t.adjectives) + "?";
      case 4:
        return number() + " more " + rng_.pick(t.plurals) + " until the " + rng_.pick(t.nouns) +
               end();
      case 5:
        return "I really " + rng_.pick(t.verbs) + " this " + rng_.pick(t.adjectives) + " " +
               rng_.pick(t.nouns) + end();
      case 6:
        return "What a " + rng_.pick(t.adjectives) + " " + rng_.pick(t.nouns) + " " +
               rng_.pick(kTimes) + end();
      case 7:
        return "Happy " + rng_.pick(kWeekdays) + " everyone, time for some " + rng_.pick(t.nouns) +
               end();
      case 8:
        return "Big thanks to @" + handle() + " for the " + rng_.pick(t.adjectives) + " " +
               rng_.pick(t.nouns) + end();
      case 9:
        return capitalize(rng_.pick(kOpeners)) + ", the " + rng_.pick(t.nouns) + " was " +
               rng_.pick(t.adjectives) + " and I " + rng_.pick(kFeelings) + end();
      case 10:
        return "New " + rng_.pick(t.nouns) + " from " + rng_.pick(t.entities) + " is out now" +
               end();
      case 11:
        return "Who else is " + rng_.pick(t.gerunds) + " the " + rng_.pick(t.nouns) + " " +
               rng_.pick(kTimes) + "?";
      case 12:
        return "Thinking about " + rng_.pick(t.plurals) + " and " + rng_.pick(t.plurals) + " " +
               rng_.pick(t.places) + end();
      case 13:
        return "We are " + rng_.pick(t.gerunds) + " the " + rng_.pick(t.nouns) + " with @" +
               handle() + " " + rng_.pick(kTimes) + end();
      case 14:
        return "My " + rng_.pick(t.nouns) + " " + rng_.pick(kTimes) + " was " +
               rng_.pick(t.adjectives) + ", " + rng_.pick(t.entities) + " " + rng_.pick(t.past) +
               " it" + end();
      default:
        return "Time to " + rng_.pick(t.verbs) + " some " + rng_.pick(t.plurals) + " " +
               rng_.pick(t.places) + end();
    }
  }

  Rng& rng_;
};

struct Author {
  std::string id;
  std::string lang;
  bool verified;
  std::int64_t followers;
  double daily_rate;
};

}  // namespace

Corpus synthesize_tweets(std::size_t count, std::uint64_t seed, const SynthOptions& opt) {
  Rng author_rng(derive_seed(seed, 0xa117));
  std::vector<Author> authors;
  authors.reserve(opt.author_count);
  for (std::size_t i = 0; i < opt.author_count; ++i) {
    Author a;
    a.id = "u" + std::to_string(100000 + i);
    a.lang = author_rng.bernoulli(0.97) ? "en" : (author_rng.bernoulli(0.5) ? "es" : "de");
    a.verified = author_rng.bernoulli(0.97);
    a.followers = static_cast<std::int64_t>(std::exp(7.5 + 1.8 * author_rng.normal()));
    const double rate = std::exp(1.0 + 0.9 * author_rng.normal());
    a.daily_rate = std::round(rate * 100.0) / 100.0;
    authors.push_back(std::move(a));
  }

  Rng rng(derive_seed(seed, 0x7e7));
  TweetWriter writer(rng);
  Corpus c;
  c.label = Label::human;
  c.records.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Author& a = authors[rng.below(authors.size())];
    TextRecord r;
    r.author_id = a.id;
    r.lang = a.lang;
    r.verified = a.verified;
    r.follower_count = a.followers;
    r.daily_tweet_rate = a.daily_rate;
    r.created_at = opt.start_time + static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(opt.span_seconds)));
    std::string body = a.lang == "en" ? writer.tweet() : writer.foreign();
    const double u = rng.uniform();
    if (u < 0.90) {
      r.kind = TweetKind::original;
    } else if (u < 0.94) {
      r.kind = TweetKind::retweet;
      body = "RT @" + writer.handle() + ": " + body;
    } else if (u < 0.98) {
      r.kind = TweetKind::reply;
      body = "@" + writer.handle() + " " + body;
    } else {
      r.kind = TweetKind::quote;
    }
    r.truncated = rng.bernoulli(0.03);
    if (r.truncated && body.size() > 20) body = body.substr(0, body.size() / 2) + "...";
    r.text = std::move(body);
    c.records.push_back(std::move(r));
  }
  return c;
}

}  // namespace evl
