"""Complex-valued neural machine translation with syntax-aware embeddings.

Word embeddings live on the real plane and dependency-label embeddings on the
imaginary plane; the whole encoder-decoder runs on split complex arithmetic
with a hand-rolled reverse-mode tape.
"""

from .ctensor import (CTensor, Gradients, GradCheckReport, MODULUS_EPS, ShapeError,
                      Tape, TapeUsageError, backward, cadd, cconcat, cdot, cmatmul,
                      cmul_scalar, crow, cstack, ctranspose, drop_imag, grad_check,
                      log_softmax, modulus, picked_nll)
from .data import (AnnotatedSentence, Batch, CorpusError, DepVocab, EncodedExample,
                   ParallelExample, SyntaxEmbedding, Vocab, VocabBundle, batch_pad,
                   build_vocabs, encode_example, ids_to_tokens, load_conllu_parallel,
                   read_conllu, syntax_embed)
from .evaluation import (BleuReport, LengthBucketReport, bleu, bucket_by_length,
                         decode_corpus, decode_sentences, dep_accuracy,
                         evaluate_corpus)
from .layers import CLinear, CRNNCell, crelu, crnn_step, csoftmax, ctanh
from .model import (ComplexSeq2Seq, DecodeTrace, Hypothesis, UsageError,
                    export_attention, read_attention_tsv)
from .rng import named_rng
from .training import (Adam, Checkpoint, CheckpointError, CheckpointShapeError,
                       CheckpointTruncatedError, CheckpointVersionError, EpochRecord,
                       TrainConfig, TrainingError, build_model, fit, joint_loss,
                       load_checkpoint, save_checkpoint, snapshot, train_epoch)

__version__ = "0.1.0"
