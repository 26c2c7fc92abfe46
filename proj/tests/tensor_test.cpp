// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "gnl/errors.hpp"
#include "gnl/tensor.hpp"

namespace gnl {
namespace {

TEST(Tensor, ShapesAndSizes) {
  EXPECT_EQ(Tensor::scalar(2.5).rank(), 0u);
  EXPECT_EQ(Tensor::scalar(2.5).size(), 1u);
  EXPECT_DOUBLE_EQ(Tensor::scalar(2.5).item(), 2.5);

  const Tensor v = Tensor::vector({1, 2, 3});
  EXPECT_EQ(v.shape(), (Shape{3}));
  EXPECT_EQ(v.rows(), 3u);
  EXPECT_EQ(v.cols(), 1u);

  const Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_DOUBLE_EQ(m(1, 0), 4.0);
  EXPECT_DOUBLE_EQ(m(0, 2), 3.0);
}

TEST(Tensor, ZerosIsZeroFilled) {
  const Tensor z = Tensor::zeros({4, 2});
  EXPECT_EQ(z.size(), 8u);
  for (double x : z.values()) EXPECT_EQ(x, 0.0);
}

TEST(Tensor, ValueCountMustMatchShape) {
  EXPECT_THROW(Tensor::matrix(2, 2, {1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor({3}, {1, 2}), ShapeError);
}

TEST(Tensor, ItemRequiresOneElement) {
  EXPECT_THROW(Tensor::vector({1, 2}).item(), ShapeError);
  EXPECT_DOUBLE_EQ(Tensor::vector({7}).item(), 7.0);
}

TEST(Tensor, ShapeString) {
  EXPECT_EQ(shape_string({}), "[]");
  EXPECT_EQ(shape_string({3}), "[3]");
  EXPECT_EQ(shape_string({2, 5}), "[2x5]");
}

TEST(Tensor, ZerosLikeKeepsShapes) {
  const ParamSet p = {Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor::vector({5})};
  const ParamSet z = zeros_like(p);
  ASSERT_EQ(z.size(), 2u);
  EXPECT_EQ(z[0].shape(), p[0].shape());
  EXPECT_EQ(z[1].shape(), p[1].shape());
  EXPECT_EQ(z[0][3], 0.0);
}

TEST(Tensor, EqualityComparesShapeAndValues) {
  EXPECT_EQ(Tensor::vector({1, 2}), Tensor::vector({1, 2}));
  EXPECT_NE(Tensor::vector({1, 2}), Tensor::matrix(1, 2, {1, 2}));
  EXPECT_NE(Tensor::vector({1, 2}), Tensor::vector({1, 3}));
}

}  // namespace
}  // namespace gnl
