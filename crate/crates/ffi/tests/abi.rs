use std::ffi::{c_char, CStr, CString};
use std::ptr;

use psyfeat::corpus::{Corpus, UserDocument};
use psyfeat::lda::{build_vocabulary, save_model, train, TrainParams};
use psyfeat_ffi::*;

fn last_error() -> String {
    let p = psy_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn c_tokens(words: &[&str]) -> (Vec<CString>, Vec<*const c_char>) {
    let owned: Vec<CString> = words.iter().map(|w| CString::new(*w).unwrap()).collect();
    let ptrs = owned.iter().map(|s| s.as_ptr()).collect();
    (owned, ptrs)
}

#[test]
fn lexicon_round_trip() {
    let text = CString::new("%\n1\tposemo\n2\tnegemo\n%\nhapp*\t1\nsad\t2\n").unwrap();
    let mut lex = ptr::null_mut();
    unsafe {
        assert_eq!(psy_lexicon_parse(text.as_ptr(), &mut lex), PsyStatus::Ok);
        assert!(psy_last_error().is_null());
        assert_eq!(psy_lexicon_num_categories(lex), 2);
        let name = CStr::from_ptr(psy_lexicon_category_name(lex, 1));
        assert_eq!(name.to_str().unwrap(), "negemo");
        assert!(psy_lexicon_category_name(lex, 2).is_null());

        let (_owned, toks) = c_tokens(&["happy", "HAPPINESS", "sad", "table"]);
        let mut out = [0.0; 2];
        let st = psy_lexicon_features(lex, toks.as_ptr(), toks.len(), out.as_mut_ptr(), out.len());
        assert_eq!(st, PsyStatus::Ok);
        assert_eq!(out, [0.5, 0.25]);

        let mut small = [0.0; 1];
        let st = psy_lexicon_features(lex, toks.as_ptr(), toks.len(), small.as_mut_ptr(), 1);
        assert_eq!(st, PsyStatus::BufferTooSmall);
        assert!(last_error().contains("2 needed"));
        psy_lexicon_free(lex);
    }
}

#[test]
fn lexicon_errors() {
    let bad = CString::new("%\n1\tposemo\n%\nhappy\t9\n").unwrap();
    let mut lex = ptr::null_mut();
    unsafe {
        assert_eq!(psy_lexicon_parse(bad.as_ptr(), &mut lex), PsyStatus::Parse);
        assert!(lex.is_null());
        assert!(last_error().contains(":4:"), "{}", last_error());

        let missing = CString::new("/nonexistent/x.dic").unwrap();
        assert_eq!(psy_lexicon_load(missing.as_ptr(), &mut lex), PsyStatus::Io);
        assert!(last_error().contains("/nonexistent/x.dic"));

        assert_eq!(
            psy_lexicon_parse(ptr::null(), &mut lex),
            PsyStatus::NullPointer
        );
        psy_lexicon_free(ptr::null_mut());
        assert_eq!(psy_lexicon_num_categories(ptr::null()), 0);
    }
}

#[test]
fn model_load_and_infer() {
    let dir = tempfile::tempdir().unwrap();
    let docs = (0..20)
        .map(|i| UserDocument {
            user_id: format!("u{i}"),
            tokens: if i % 2 == 0 {
                vec!["apple", "pear", "fig"]
            } else {
                vec!["car", "bus", "van"]
            }
            .into_iter()
            .cycle()
            .take(30)
            .map(String::from)
            .collect(),
            raw_byte_length: 0,
            score: None,
        })
        .collect();
    let corpus = Corpus::new(docs, "test").unwrap();
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let (model, _) = train(&corpus, vocab, &TrainParams::with_defaults(2), 1).unwrap();
    let path = dir.path().join("m.json");
    save_model(&model, &path).unwrap();

    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    unsafe {
        assert_eq!(psy_model_load(cpath.as_ptr(), &mut handle), PsyStatus::Ok);
        assert_eq!(psy_model_num_topics(handle), 2);
        let (_owned, toks) = c_tokens(&["apple", "pear", "fig", "apple", "unknown"]);
        let mut theta = [0.0; 2];
        let st = psy_model_infer(
            handle,
            toks.as_ptr(),
            toks.len(),
            0,
            0,
            9,
            theta.as_mut_ptr(),
            2,
        );
        assert_eq!(st, PsyStatus::Ok, "{}", last_error());
        assert!((theta[0] + theta[1] - 1.0).abs() < 1e-9);
        // four known tokens under alpha = 2.5 cap the dominant share at 6.5 / 9
        assert!(theta[0].max(theta[1]) > 0.7, "{theta:?}");

        let (_owned, oov) = c_tokens(&["nothing", "known"]);
        let st = psy_model_infer(
            handle,
            oov.as_ptr(),
            oov.len(),
            0,
            0,
            9,
            theta.as_mut_ptr(),
            2,
        );
        assert_eq!(st, PsyStatus::EmptyDocument);

        let st = psy_model_infer(
            handle,
            toks.as_ptr(),
            toks.len(),
            10,
            10,
            9,
            theta.as_mut_ptr(),
            2,
        );
        assert_eq!(st, PsyStatus::InvalidArgument);
        psy_model_free(handle);
    }

    std::fs::write(&path, "{\"version\": 99}").unwrap();
    let mut handle = ptr::null_mut();
    unsafe {
        assert_eq!(
            psy_model_load(cpath.as_ptr(), &mut handle),
            PsyStatus::ModelFormat
        );
    }
}

#[test]
fn clean_text_ownership() {
    let text = CString::new("回复@alice:好开心 http://t.cn/x [哈哈] //@bob: 转发").unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(
            psy_clean_text(text.as_ptr(), false, &mut out),
            PsyStatus::Ok
        );
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), "好开心");
        psy_string_free(out);
        psy_string_free(ptr::null_mut());

        let bad = [0xffu8, 0];
        let st = psy_clean_text(bad.as_ptr().cast(), false, &mut out);
        assert_eq!(st, PsyStatus::InvalidUtf8);
    }
}

#[test]
fn statistics() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [1.0, 3.0, 2.0, 4.0];
    let (mut r, mut p) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            psy_pearson(x.as_ptr(), y.as_ptr(), 4, &mut r, &mut p),
            PsyStatus::Ok
        );
        assert!((r - 0.8).abs() < 1e-12);
        assert!((p - 0.2).abs() < 1e-9);

        let flat = [2.0; 4];
        let st = psy_pearson(x.as_ptr(), flat.as_ptr(), 4, &mut r, &mut p);
        assert_eq!(st, PsyStatus::ZeroVariance);

        let mut e = 0.0;
        let pred = [1.0, 2.0, 3.0];
        let act = [2.0, 3.0, 4.0];
        assert_eq!(
            psy_rmse(pred.as_ptr(), act.as_ptr(), 3, &mut e),
            PsyStatus::Ok
        );
        assert!((e - 1.0).abs() < 1e-15);
        assert_eq!(
            psy_rmse(pred.as_ptr(), act.as_ptr(), 0, &mut e),
            PsyStatus::InvalidArgument
        );
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(psy_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
