#include <math.h>
#include <stdio.h>
#include <string.h>

#include "psyfeat.h"

#define CHECK(cond)                                                  \
    do {                                                             \
        if (!(cond)) {                                               \
            const char *err = psy_last_error();                      \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,  \
                    #cond, err ? err : "no error");                  \
            return 1;                                                \
        }                                                            \
    } while (0)

int main(void) {
    PsyLexicon *lex = NULL;
    CHECK(psy_lexicon_parse("%\n1\tposemo\n%\nhapp*\t1\n", &lex) == PSY_STATUS_OK);
    CHECK(psy_lexicon_num_categories(lex) == 1);
    CHECK(strcmp(psy_lexicon_category_name(lex, 0), "posemo") == 0);

    const char *tokens[] = {"happy", "day"};
    double freq[1] = {0};
    CHECK(psy_lexicon_features(lex, tokens, 2, freq, 1) == PSY_STATUS_OK);
    CHECK(fabs(freq[0] - 0.5) < 1e-12);
    psy_lexicon_free(lex);

    char *clean = NULL;
    CHECK(psy_clean_text("hi @bob http://x.cn/a", false, &clean) == PSY_STATUS_OK);
    CHECK(strcmp(clean, "hi") == 0);
    psy_string_free(clean);

    double x[] = {1, 2, 3, 4}, y[] = {1, 3, 2, 4}, r = 0, p = 0;
    CHECK(psy_pearson(x, y, 4, &r, &p) == PSY_STATUS_OK);
    CHECK(fabs(r - 0.8) < 1e-12);

    PsyTopicModel *model = NULL;
    CHECK(psy_model_load("/nonexistent/model.json", &model) == PSY_STATUS_IO);
    CHECK(model == NULL);
    CHECK(strstr(psy_last_error(), "/nonexistent/model.json") != NULL);

    printf("ok %s\n", psy_version());
    return 0;
}
